"""Smoke test for the `ewd` extension module.

Build and run from the repository root:

    cargo build --release -p ewd-py
    cp target/release/libewd.so python/ewd.so
    python3 python/smoke_test.py
"""

import math

import ewd


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    target = ewd.OBox(0.0, 0.0, 4.0, 2.0, 0.3)
    pred = ewd.OBox.from_degrees(0.5, -0.2, 3.5, 2.5, 25.0)

    # A box and its cyclically shifted self describe the same rectangle.
    for k in range(4):
        value, _ = ewd.loss(target.shifted(k), target)
        assert value < 1e-9, (k, value)

    # Closed form against the per-edge enumeration.
    closed, k = ewd.egwd(pred, target)
    oracle, k_oracle = ewd.egwd_oracle(pred, target)
    assert close(closed, oracle) and k == k_oracle

    # Squares: the Gaussian baselines cannot see rotation, the edge loss can.
    square = ewd.OBox(0.0, 0.0, 1.0, 1.0, 0.0)
    turned = square.rotated(math.radians(30))
    assert ewd.gwd(turned, square) < 1e-12
    assert ewd.kld(turned, square) < 1e-12
    value, grad, _ = ewd.gradient(turned, square)
    assert value > 1e-3 and abs(grad[4]) > 1e-3

    # Analytic gradient against central differences.
    cfg = ewd.LossConfig("edwd", norm="target_wh", post="log1p")
    _, grad, _ = ewd.gradient(pred, target, cfg)
    h = 1e-6
    for i in range(5):
        p = pred.params()
        lo, hi = list(p), list(p)
        lo[i] -= h
        hi[i] += h
        f_hi, _ = ewd.loss(ewd.OBox(*hi), target, cfg)
        f_lo, _ = ewd.loss(ewd.OBox(*lo), target, cfg)
        assert close(grad[i], (f_hi - f_lo) / (2 * h), 1e-5), (i, grad[i])

    assert close(ewd.box_iou(square, square.rotated(math.pi / 4)), math.sqrt(2) / 2)
    quad = [(0.0, 0.0), (4.0, 0.5), (4.5, 3.0), (-0.5, 2.5)]
    assert ewd.quad_loss(quad, quad)[0] < 1e-12
    assert close(ewd.quad_iou(quad, quad), 1.0)

    rows = ewd.curve([1.0, 8.0], -90.0, 90.0, 1.0, ["edwd", "kld"])
    assert len(rows) == 2 * 2 * 181

    manifest = """
[[scenario]]
name = "square"
target = [0, 0, 4, 4, 0]
init = [0, 0, 4, 4, 30]
"""
    (summary,) = ewd.fit(manifest)
    assert summary["final_iou"] > 0.99, summary

    passed, _, violations = ewd.verify("egwd-oracle", 200, 0)
    assert passed and violations == 0

    try:
        ewd.OBox(0.0, 0.0, -1.0, 1.0, 0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative width accepted")

    print(f"ok: {cfg!r}, {pred!r}")


if __name__ == "__main__":
    main()
