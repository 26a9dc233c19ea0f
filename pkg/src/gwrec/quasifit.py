"""Fitting of the normalised stationary brackets by quasi-polynomials and
the mechanical verification battery built on top of the fits.

All checks are exact rational identities; the only tolerance anywhere is
the explicit deviation bound of the asymptotics report, itself compared
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement, permutations, product

from .algebra import MultiPoly, QuasiPoly, SymRat, c_factor, ceil_div, format_rat
from .engine import DEFAULT_ENGINE, Engine, degree_of
from .moduli import psi_intersection


class UnderdeterminedSystemError(ValueError):
    """Fewer samples than interpolation coefficients."""


class InconsistentSamplesError(ValueError):
    """A surplus sample disagrees with the unique interpolant: either a bug
    or a failure of quasi-polynomiality."""


def _fmt_witness(v):
    if isinstance(v, Fraction):
        return format_rat(v)
    if isinstance(v, SymRat):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [_fmt_witness(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _fmt_witness(x) for k, x in v.items()}
    if isinstance(v, (int, str)):
        return v
    return repr(v)


@dataclass
class VerificationReport:
    claim: str
    status: str  # "pass" | "fail" | "inconclusive-atoms" | "exploratory"
    witness: dict | None = None

    @property
    def ok(self) -> bool:
        return self.status in ("pass", "exploratory")

    def to_obj(self):
        out = {"claim": self.claim, "status": self.status}
        if self.witness is not None:
            out["witness"] = {k: _fmt_witness(v) for k, v in self.witness.items()}
        return out


@dataclass
class FitSpec:
    """What to fit: the stationary slots of a bracket over P^N with an
    optional fixed multiset of extra insertions."""

    N: int
    g: int
    n: int
    fixed_insertions: tuple = ()
    cosets: list | None = None
    min_m: int | None = None  # lower bound for sample levels
    surplus: int = 2

    @property
    def degree_bound(self) -> int:
        return 3 * self.g - 3 + self.n + len(self.fixed_insertions)

    def floor(self) -> int:
        if self.min_m is not None:
            return max(0, self.min_m)
        return max(0, 3 * self.g - 1)


def _solve_exact(rows, rhs_rows, ncols):
    """Gaussian elimination over Q for an overdetermined multi-RHS system.

    rows[i] has ncols coefficients, rhs_rows[i] is the tuple of right-hand
    sides for that equation.  Returns one solution vector per RHS column.
    Raises when the system is underdetermined or inconsistent.
    """
    ncomp = len(rhs_rows[0]) if rhs_rows else 0
    aug = [list(r) + list(b) for r, b in zip(rows, rhs_rows)]
    nrows = len(aug)
    pivots = []
    row = 0
    for col in range(ncols):
        sel = None
        for r in range(row, nrows):
            if aug[r][col] != 0:
                sel = r
                break
        if sel is None:
            continue
        aug[row], aug[sel] = aug[sel], aug[row]
        pv = aug[row][col]
        aug[row] = [x / pv for x in aug[row]]
        for r in range(nrows):
            if r != row and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[row])]
        pivots.append(col)
        row += 1
        if row == nrows:
            break
    if len(pivots) < ncols:
        raise UnderdeterminedSystemError(
            f"rank {len(pivots)} < {ncols} unknowns from {nrows} samples"
        )
    for r in range(row, nrows):
        if any(aug[r][ncols:]):
            raise InconsistentSamplesError("surplus sample disagrees with interpolant")
    sol = [[Fraction(0)] * ncomp for _ in range(ncols)]
    for r, col in enumerate(pivots):
        sol[col] = aug[r][ncols:]
    return sol


def _monomials(nvars, degree):
    """Exponent tuples of total degree <= degree, in a fixed order."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 0:
            out.append(tuple(prefix))
            return
        for e in range(remaining + 1):
            rec(prefix + [e], remaining - e, slots - 1)

    rec([], degree, nvars)
    return out


def quasi_fit(samples, N, nvars, degree_bound) -> QuasiPoly:
    """Exact interpolation of one quasi-polynomial from sampled values.

    Samples are grouped by coset; each branch is solved independently and
    component-wise per atom, and every sample (surplus included) is checked
    against the interpolant afterwards.
    """
    mod = N + 1
    groups: dict = {}
    for point, value in samples:
        point = tuple(int(x) for x in point)
        if len(point) != nvars:
            raise ValueError("sample arity mismatch")
        groups.setdefault(tuple(x % mod for x in point), []).append(
            (point, SymRat.of(value))
        )
    basis = _monomials(nvars, degree_bound)
    branches = {}
    for res, pts in groups.items():
        if len(pts) < len(basis):
            raise UnderdeterminedSystemError(
                f"coset {res}: {len(pts)} samples for {len(basis)} coefficients"
            )
        atoms = sorted({a for _, v in pts for a in v.atoms})
        rows = []
        rhs = []
        for point, value in pts:
            rows.append(
                [
                    Fraction(
                        _int_pow(point, e)
                    )
                    for e in basis
                ]
            )
            rhs.append([value.scalar] + [value.atoms.get(a, Fraction(0)) for a in atoms])
        sol = _solve_exact(rows, rhs, len(basis))
        terms = {}
        for e, comp in zip(basis, sol):
            coeff = SymRat(comp[0], dict(zip(atoms, comp[1:])))
            if coeff:
                terms[e] = coeff
        poly = MultiPoly(nvars, terms)
        for point, value in pts:
            got = poly.eval(point)
            if got != value:
                raise InconsistentSamplesError(
                    f"sample at {point}: interpolant gives {got!r}, engine {value!r}"
                )
        if poly.terms:
            branches[res] = poly
    return QuasiPoly(N, nvars, branches)


def _int_pow(point, exps):
    out = 1
    for p, e in zip(point, exps):
        out *= p**e
    return out


def stationary_parity(N, g, n, fixed=()):
    """Residue class of sum(m_i) mod N+1 on which the bracket can be nonzero."""
    extra = sum(m + k for m, k in fixed)
    return ((N - 3) * (1 - g) + n + len(fixed) - extra - n * N) % (N + 1)


def fit_stationary(spec: FitSpec, engine: Engine = DEFAULT_ENGINE) -> QuasiPoly:
    """Sample the engine on per-coset grids and fit the quasi-polynomial of
    the c-normalised stationary bracket.  Only canonical (sorted) cosets are
    sampled; the rest follow by symmetry and are spot-checked against the
    engine afterwards."""
    N, g, n = spec.N, spec.g, spec.n
    mod = N + 1
    D = spec.degree_bound
    want = stationary_parity(N, g, n, spec.fixed_insertions)
    if spec.cosets is not None:
        cosets = [tuple(r) for r in spec.cosets]
    else:
        cosets = [
            r
            for r in combinations_with_replacement(range(mod), n)
            if sum(r) % mod == want
        ]

    def sample(ms):
        v = engine.invariant(
            N, g, list(spec.fixed_insertions) + [(m, N) for m in ms]
        )
        for m in ms:
            v = v * c_factor(mod, m)
        return v

    floor = spec.floor()
    samples = []
    fitted = {}
    for res in cosets:
        bases = [floor + ((r - floor) % mod) for r in res]
        pts = list(product(*[[b + mod * i for i in range(D + 1)] for b in bases]))
        if spec.surplus >= 1:
            pts.append(tuple(b + (mod * (D + 1) if j == 0 else 0) for j, b in enumerate(bases)))
        if spec.surplus >= 2:
            pts.append(
                tuple(
                    b + (mod * (D + 2) if j == min(1, n - 1) else 0)
                    for j, b in enumerate(bases)
                )
            )
        for p in pts:
            samples.append((p, sample(p)))
        sub = quasi_fit([s for s in samples if tuple(x % mod for x in s[0]) == res],
                        N, n, D)
        fitted.update(sub.branches)

    # Complete the branch family under permutations of the slots.
    full = dict(fitted)
    for res, poly in fitted.items():
        for perm in permutations(range(n)):
            new_res = [0] * n
            for i, p in enumerate(perm):
                new_res[p] = res[i]
            new_res = tuple(new_res)
            if new_res in full:
                continue
            cand = poly.relabel(perm)
            full[new_res] = cand
            check = tuple(floor + ((r - floor) % mod) for r in new_res)
            if cand.eval(check) != sample(check):
                raise InconsistentSamplesError(
                    f"symmetry completion failed at coset {new_res}"
                )
    return QuasiPoly(N, n, full)


class StationaryFamily:
    """Evaluator for the c-normalised stationary quasi-polynomial family in
    a fixed number of slots, including at the negative arguments k - N.

    Arguments below the sampling floor (negative entries in particular) are
    evaluated by exact univariate extrapolation along their coset, one slot
    at a time; each extrapolation carries a surplus node whose agreement
    with the interpolant is the embedded quasi-polynomiality check.  The
    genus-0 one- and two-slot families use their closed forms instead: they
    are rational in the arguments, not polynomial.
    """

    def __init__(self, N, g, nvars, engine: Engine = DEFAULT_ENGINE, min_m=None):
        self.N = N
        self.g = g
        self.nvars = nvars
        self.engine = engine
        self.floor = max(0, 3 * g - 1 if min_m is None else min_m)
        self.degree = 3 * g - 3 + nvars
        self._memo: dict = {}

    @property
    def closed_form(self) -> bool:
        return self.g == 0 and self.nvars <= 2

    def value(self, v) -> SymRat:
        v = tuple(int(x) for x in v)
        if len(v) != self.nvars:
            raise ValueError("arity mismatch")
        if self.closed_form:
            if self.nvars == 1:
                return SymRat(Fraction((self.N + 1) ** 2, (v[0] + 2) ** 2))
            return SymRat(Fraction(self.N + 1, v[0] + v[1] + self.N + 1))
        if v in self._memo:
            return self._memo[v]
        out = self._value(v)
        self._memo[v] = out
        return out

    def _value(self, v) -> SymRat:
        mod = self.N + 1
        for i, x in enumerate(v):
            if x < self.floor:
                base = self.floor + ((x - self.floor) % mod)
                nodes = [base + mod * j for j in range(self.degree + 2)]
                vals = [self.value(v[:i] + (t,) + v[i + 1 :]) for t in nodes]
                got = _lagrange(nodes[:-1], vals[:-1], nodes[-1])
                if got != vals[-1]:
                    raise InconsistentSamplesError(
                        f"slice through {v} is not polynomial of degree "
                        f"{self.degree}: node {nodes[-1]} gives {vals[-1]!r}, "
                        f"interpolant {got!r}"
                    )
                return _lagrange(nodes[:-1], vals[:-1], x)
        val = self.engine.invariant(self.N, self.g, [(m, self.N) for m in v])
        for m in v:
            val = val * c_factor(mod, m)
        return val


def _lagrange(nodes, values, at):
    at = Fraction(at)
    out = SymRat(0)
    for j, xj in enumerate(nodes):
        lam = Fraction(1)
        for l, xl in enumerate(nodes):
            if l != j:
                lam *= (at - xl) / Fraction(xj - xl)
        out = out + values[j] * lam
    return out


_FAMILIES: dict = {}


def stationary_family(N, g, nvars, engine: Engine = DEFAULT_ENGINE, min_m=None):
    key = (id(engine), N, g, nvars, min_m)
    if key not in _FAMILIES:
        _FAMILIES[key] = StationaryFamily(N, g, nvars, engine, min_m)
    return _FAMILIES[key]


# ----------------------------------------------------------------------
# verification battery


def verify_top_coefficients(q: QuasiPoly, g, n, N) -> VerificationReport:
    """Top coefficients of every nontrivial branch must be the psi numbers
    scaled by (N+1)^(3-2g-n), atom-free, and identical across cosets."""
    claim = f"top-coefficients N={N} g={g} n={n}"
    D = 3 * g - 3 + n
    scale = Fraction(N + 1) ** (3 - 2 * g - n)
    tops = {}
    for res, poly in sorted(q.branches.items()):
        for e in _monomials(n, D):
            if sum(e) != D:
                continue
            coeff = poly.coeff(e)
            expected = scale * psi_intersection(g, e)
            if coeff.atoms:
                return VerificationReport(
                    claim, "fail",
                    {"coset": res, "monomial": e, "atoms": sorted(coeff.atoms)},
                )
            if coeff.scalar != expected:
                return VerificationReport(
                    claim, "fail",
                    {"coset": res, "monomial": e, "got": coeff.scalar,
                     "expected": expected},
                )
            prev = tops.setdefault(e, (res, coeff.scalar))
            if prev[1] != coeff.scalar:
                return VerificationReport(
                    claim, "fail",
                    {"monomial": e, "coset_a": prev[0], "coset_b": res},
                )
    return VerificationReport(claim, "pass")


def verify_negative_evaluation(
    N, g, k_exponents, m_vector, engine: Engine = DEFAULT_ENGINE
) -> VerificationReport:
    """Primary insertions are stationary slots evaluated at k - N: compare
    the engine bracket against the quasi-polynomial family."""
    ks = tuple(int(k) for k in k_exponents)
    ms = tuple(int(m) for m in m_vector)
    claim = f"negative-evaluation N={N} g={g} k={ks} m={ms}"
    if any(not 0 <= k <= N for k in ks):
        raise ValueError("primary exponent out of range")
    lhs = engine.invariant(N, g, [(0, k) for k in ks] + [(m, N) for m in ms])
    for m in ms:
        lhs = lhs * c_factor(N + 1, m)
    fam = stationary_family(N, g, len(ks) + len(ms), engine)
    rhs = fam.value(tuple(k - N for k in ks) + ms)
    if lhs == rhs:
        return VerificationReport(claim, "pass")
    return VerificationReport(claim, "fail", {"engine": lhs, "family": rhs})


def verify_p_string_divisor(
    N, g, n, engine: Engine = DEFAULT_ENGINE, max_m=10
) -> VerificationReport:
    """The string and divisor equations written purely in terms of the
    stationary family, checked on a grid."""
    claim = f"p-string-divisor N={N} g={g} n={n} grid<= {max_m}"
    mod = N + 1
    lo = max(0, 3 * g - 1)
    fam_n = stationary_family(N, g, n, engine)
    fam_n1 = stationary_family(N, g, n + 1, engine)
    checked = 0
    for ms in combinations_with_replacement(range(lo, max_m + 1), n):
        # divisor: p(1-N, m) = d * p(m)
        if sum(ms) % mod == stationary_parity(N, g, n):
            d = degree_of(N, g, [(m, N) for m in ms])
            lhs = fam_n1.value((1 - N,) + ms)
            rhs = d * fam_n.value(ms)
            if lhs != rhs:
                return VerificationReport(
                    claim, "fail", {"form": "divisor", "m": ms, "lhs": lhs, "rhs": rhs}
                )
            checked += 1
        # string: p(-N, m) = sum_i ceil(m_i/(N+1)) p(..., m_i - 1, ...)
        if (sum(ms) + 1) % mod == stationary_parity(N, g, n + 1):
            lhs = fam_n1.value((-N,) + ms)
            rhs = SymRat(0)
            for i, m in enumerate(ms):
                if m == 0:
                    continue  # the decremented term drops
                rhs = rhs + ceil_div(m, mod) * fam_n.value(
                    ms[:i] + (m - 1,) + ms[i + 1 :]
                )
            if lhs != rhs:
                return VerificationReport(
                    claim, "fail", {"form": "string", "m": ms, "lhs": lhs, "rhs": rhs}
                )
            checked += 1
    if checked == 0:
        return VerificationReport(claim, "fail", {"reason": "empty grid"})
    return VerificationReport(claim, "pass", {"points": checked})


def verify_dilaton_derivative(
    g, n, engine: Engine = DEFAULT_ENGINE, max_m=8
) -> VerificationReport:
    """On the projective line, a level-one unit insertion equals twice the
    slot derivative of the stationary family at zero.  Proven for genus 0
    and 1; higher genus is only reported."""
    N = 1
    claim = f"dilaton-derivative g={g} n={n}"
    if g > 1:
        return VerificationReport(claim, "exploratory",
                                  {"reason": "unproven beyond genus 1"})
    lo = max(0, 3 * g - 1)
    spec = FitSpec(N=N, g=g, n=n + 1, min_m=0)
    q = fit_stationary(spec, engine)
    checked = 0
    for ms in combinations_with_replacement(range(lo, max_m + 1), n):
        if sum(ms) % 2 != stationary_parity(N, g, n + 1):
            continue
        res = tuple(m % 2 for m in ms) + (0,)
        branch = q.branches.get(res)
        if branch is None:
            continue
        rhs = 2 * branch.deriv(n).eval(ms + (0,))
        lhs = engine.invariant(N, g, [(1, 0)] + [(m, N) for m in ms])
        for m in ms:
            lhs = lhs * c_factor(2, m)
        if lhs != rhs:
            return VerificationReport(
                claim, "fail", {"m": ms, "lhs": lhs, "rhs": rhs}
            )
        checked += 1
    if checked == 0:
        return VerificationReport(claim, "fail", {"reason": "empty grid"})
    return VerificationReport(claim, "pass", {"points": checked})


def asymptotics_report(
    N, g, n, ray, m_max, engine: Engine = DEFAULT_ENGINE,
    atom_values=None, bound=Fraction(1, 100),
) -> VerificationReport:
    """Ratio of the normalised bracket to its top-degree form along a ray;
    the deviation from 1 is reported and compared to the bound exactly."""
    ray = tuple(int(r) for r in ray)
    if len(ray) != n or any(r <= 0 for r in ray):
        raise ValueError("ray must have positive entries")
    claim = f"asymptotics N={N} g={g} n={n} ray={ray}"
    mod = N + 1
    lo = max(1, 3 * g - 1)
    t = m_max // max(ray)
    while t > 0:
        ms = tuple(t * r for r in ray)
        if min(ms) >= lo and sum(ms) % mod == stationary_parity(N, g, n):
            break
        t -= 1
    if t == 0:
        return VerificationReport(claim, "fail", {"reason": "no admissible point"})
    ms = tuple(t * r for r in ray)
    val = engine.invariant(N, g, [(m, N) for m in ms])
    for m in ms:
        val = val * c_factor(mod, m)
    try:
        num = val.resolve(atom_values or {})
    except KeyError as exc:
        return VerificationReport(claim, "inconclusive-atoms", {"atom": str(exc)})
    D = 3 * g - 3 + n
    top = Fraction(0)
    scale = Fraction(N + 1) ** (3 - 2 * g - n)
    for e in _monomials(n, D):
        if sum(e) != D:
            continue
        w = psi_intersection(g, e)
        if w:
            top += scale * w * _int_pow(ms, e)
    if top == 0:
        return VerificationReport(claim, "fail", {"reason": "vanishing top form"})
    dev = abs(num / top - 1)
    status = "pass" if dev <= bound else "fail"
    return VerificationReport(
        claim, status, {"m": ms, "deviation": dev, "bound": bound}
    )
