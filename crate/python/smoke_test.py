"""Smoke test for the polarflip_py extension module.

Build and install first:  maturin develop -m crates/python/Cargo.toml --release
"""

import random

import polarflip_py as pf


def main():
    spec = pf.CodeSpec.construct(1024, 512, 16, 2.365)
    crc = pf.CrcSpec(16, 0x8005)
    assert len(spec.frozen_set) == 496 and len(spec.info_set) == 528
    assert pf.CodeSpec.construct(8, 4, 0).frozen_set == [0, 1, 2, 4]

    assert pf.CrcSpec().compute([1]) == [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1]
    rng = random.Random(1)
    msg = [rng.randint(0, 1) for _ in range(512)]
    payload = crc.append(msg)
    assert crc.check(payload)

    u = spec.insert_payload(payload)
    x = spec.encode(u)
    assert spec.encode(x) == u

    # Noiseless decoding recovers the payload.
    clean = [2.0 if b == 0 else -2.0 for b in x]
    u_hat, alpha_dec = pf.sc_decode(clean, spec)
    assert u_hat == u and len(alpha_dec) == 1024

    assert pf.early_stop_metric([1.0, 2.0, 3.0]) == 1.0
    assert pf.compute_stats([10]) == (10.0, None)
    t_av, v_t = pf.compute_stats([0, 0, 2])
    assert abs(t_av - 2 / 3) < 1e-12 and abs(v_t - 4 / 3) < 1e-12

    channel = pf.Channel(spec, 2.0, seed=7)
    dec = pf.Decoder(spec, crc)
    decoded = 0
    for i in range(200):
        llr = channel.llr(x, i)
        out = dec.decode(llr, "dscf-es", phi_threshold=9.0)
        assert out["trials_used"] <= 10
        decoded += out["payload"] == payload
        flips = pf.dscf_metrics(pf.sc_decode(llr, spec)[1], spec, 10)
        assert len(flips) == 10
    assert decoded > 180, decoded

    cal = pf.calibrate(spec, crc, 2.0, codewords=2000, seed=3)
    assert sum(cal["counts"]) == 2000 and cal["threshold"] is not None
    res = pf.run_campaign(
        spec, crc, [2.0], decoder="dscf-es", thresholds=[(2.0, cal["threshold"])],
        max_codewords=2048, min_errors=0,
    )
    assert res[0]["codewords"] == 2048 and 0.0 < res[0]["fer"] < 0.1

    try:
        dec.decode([0.0] * 8)
    except ValueError:
        pass
    else:
        raise AssertionError("length mismatch accepted")

    print("smoke test ok: fer=%.4f t_av=%.3f phi_thr=%.3f" % (res[0]["fer"], res[0]["t_av"], cal["threshold"]))


if __name__ == "__main__":
    main()
