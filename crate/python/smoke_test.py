"""Smoke test for the lucas_rank Python extension.

Imports an installed ``lucas_rank`` if there is one, otherwise loads the
library built by ``cargo build -p lucas-rank-py`` from target/.
"""

import importlib.util
import shutil
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    try:
        import lucas_rank

        return lucas_rank
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("liblucas_rank_py.so", "liblucas_rank_py.dylib", "lucas_rank_py.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                suffix = ".pyd" if name.endswith(".dll") else ".so"
                dest = Path(tempfile.mkdtemp()) / f"lucas_rank{suffix}"
                shutil.copy(lib, dest)
                spec = importlib.util.spec_from_file_location("lucas_rank", dest)
                module = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(module)
                return module
    sys.exit("lucas_rank not found; run `cargo build -p lucas-rank-py` first")


def scan_rank(a1, a2, p):
    u0, u1, n = 0, 1, 1
    while u1 % p:
        u0, u1, n = u1, (a1 * u1 + a2 * u0) % p, n + 1
    return n


def main():
    lr = load()

    fib = lr.LucasParams(1, 1)
    assert fib.delta == 5 and fib.excluded_primes == [2, 5]
    rec = fib.rank(29)
    assert (rec.m, rec.rho, rec.iota) == (28, 14, 2), rec
    for p in lr.primes_between(3, 2000):
        if not fib.is_excluded(p):
            assert fib.rank(p).rho == scan_rank(1, 1, p), p
    assert fib.term_mod(10, 1_000_000_007)[0] == 55
    assert fib.divides_rank(7, 29) and fib.divides_index(2, 29)

    assert fib.h() == 1
    assert lr.LucasParams(3, -1).h() == 4
    assert lr.compute_h(7, 3, 2, 5)[0] == 4  # phi^4

    assert fib.density(3)["delta"] == Fraction(3, 8)
    assert lr.LucasParams(4, 1).density(3)["delta"] == Fraction(1, 8)
    dens = lr.LucasParams(1, -2).density(7)
    assert dens["eta"] == 1 and dens["delta"] == Fraction(7, 24)

    c = fib.census(3, 100_000, workers=2, checkpoints_at=[10_000])
    assert c["audit_failures"] == 0
    assert abs(c["ratio_pi"] - 0.375) < 0.02, c
    assert fib.verify_mobius_identity(3, 10_000)["match"]
    assert fib.verify_inner_sum(3, 9, 10_000)["match"]
    assert abs(fib.series_residual(3)) < 1e-3

    for bad in ((2, -1), (1, -1), (0, 1)):
        try:
            lr.LucasParams(*bad)
        except ValueError:
            pass
        else:
            raise AssertionError(f"{bad} accepted")
    try:
        fib.density(6)
    except ValueError as e:
        assert "d even" in str(e)
    else:
        raise AssertionError("even d accepted")

    print("python smoke test ok")


if __name__ == "__main__":
    main()
