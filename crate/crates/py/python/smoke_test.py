"""Smoke test for the compiled `weyl` extension.

Build with `cargo build --release -p weyl-py --features extension-module`, then
run with the directory holding `weyl.so` (a copy or symlink of `libweyl.so`)
on PYTHONPATH.
"""

import math

import weyl


def main():
    names = weyl.zoo_names()
    assert "identity" in names, names

    q, err = weyl.eval_q("identity", 10.0)
    assert abs(q - 1j) < 1e-7 and err < 1e-8, (q, err)

    q, _ = weyl.eval_q("[model]\nkind = \"diagonal\"\nh1 = 4.0\nh2 = 1.0", 3.0, math.pi / 4)
    assert abs(q - 2j) < 1e-7, q

    env = weyl.envelopes("powerlog", 100.0)
    assert env["L"] <= env["A"], env

    recs = weyl.theorem1("identity", [1.0, 10.0, 100.0])
    assert len(recs) == 3 and all(r["im_q"] > 0 for r in recs), recs

    try:
        weyl.eval_q("[model]\nkind = \"powerlog\"\nalpha = 2.0\nbeta1 = 1.0\nbeta2 = 1.0", 1.0)
    except ValueError as e:
        assert "beta1 == beta2" in str(e), e
    else:
        raise AssertionError("degenerate powerlog accepted")

    ok, checks = weyl.verify_criterion(1)
    assert ok, checks
    print("smoke test ok")


if __name__ == "__main__":
    main()
