"""Smoke test for the infoflow_py extension.

Build and install next to this script first:
    cargo build --release -p infoflow-py
    cp target/release/libinfoflow_py.so python/infoflow_py.so
then run `python3 python/smoke_test.py` from the repository root.
"""

import json
import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import infoflow_py as ifp


def close(a, b, tol):
    assert abs(a - b) <= tol * max(1.0, abs(b)), (a, b)


def main():
    curve = ifp.Curve.flat(0.05)
    close(curve.discount(2.0), math.exp(-0.1), 1e-15)

    payoff = ifp.Payoff([0.0, 1.0], [0.2, 0.8])
    state = ifp.bond_price(payoff, 0.3, 5.0, curve, 0.0, 0.0)
    close(state.price, math.exp(-0.25) * 0.8, 1e-14)
    close(sum(state.cond_probs), 1.0, 1e-15)

    call = ifp.bond_call(payoff, 0.3, 5.0, curve, 0.7, 2.0)
    assert 0.0 < call < state.price
    vega, delta = ifp.bond_call_greeks(payoff, 0.3, 5.0, curve, 0.7, 2.0)
    assert math.isfinite(vega) and math.isfinite(delta)

    # at t = 0 the dividend asset is worth the discounted prior mean
    s0 = ifp.dividend_asset_price("gamma", 0.5, 2.0, curve, 0.0, 0.0, rate=2.0, shape=3)
    close(s0, math.exp(-0.1) * 1.5, 1e-13)
    try:
        ifp.dividend_asset_price("gamma", 0.5, 2.0, curve, 0.0, 0.0, mean=1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("missing gamma parameters were accepted")

    joint = {"11": 0.3, "10": 0.2, "01": 0.1, "00": 0.4}
    xs = ifp.x_probs(joint)
    red = ifp.Reduction(2)
    assert red.x_count == len(xs)
    for k, v in red.joint(xs).items():
        close(v, joint[k], 1e-14)
    assert red.unicode(1) and red.latex(2)
    try:
        ifp.x_probs({"11": 0.6, "00": 0.4})
    except ArithmeticError:
        pass
    else:
        raise AssertionError("zero-mass pattern was accepted")

    model = ifp.RationalModel([0.6, 0.55, 0.5], [0.4, 0.35, 0.3], 1.0, 1.2, 0.85)
    assert model.depth == 2
    p = model.bond_price(2, "u")
    close(p, (0.5 + 0.3 * 1.2) / (0.55 + 0.35 * 1.2), 1e-15)
    assert model.money_market("") == 1.0

    with tempfile.TemporaryDirectory() as out:
        assert ifp.run_cli(["verify", "--out", out]) == 0
        with open(os.path.join(out, "verify_report.json")) as fh:
            assert json.load(fh)
        assert ifp.run_cli(["price", "--config", os.path.join(out, "missing.json"), "--out", out]) == 2

    print("smoke test passed")


if __name__ == "__main__":
    main()
