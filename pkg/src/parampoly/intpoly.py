"""Integer-coefficient sparse polynomials as plain ``{exponents: int}`` dicts.

This is the arithmetic substrate behind rational-function fractions and the
fraction-free Groebner engine.  Nothing here knows variable names; all dicts
passed to one call must share the same exponent-tuple length.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as igcd, lcm as ilcm

ZPoly = dict  # dict[tuple[int, ...], int]


def zadd(a: ZPoly, b: ZPoly) -> ZPoly:
    if len(a) < len(b):
        a, b = b, a
    out = dict(a)
    for m, c in b.items():
        s = out.get(m)
        if s is None:
            out[m] = c
        else:
            s += c
            if s:
                out[m] = s
            else:
                del out[m]
    return out


def zsub(a: ZPoly, b: ZPoly) -> ZPoly:
    out = dict(a)
    for m, c in b.items():
        s = out.get(m)
        if s is None:
            out[m] = -c
        else:
            s -= c
            if s:
                out[m] = s
            else:
                del out[m]
    return out


def zneg(a: ZPoly) -> ZPoly:
    return {m: -c for m, c in a.items()}


def zscale(a: ZPoly, k: int) -> ZPoly:
    if not k:
        return {}
    if k == 1:
        return a
    return {m: c * k for m, c in a.items()}


def zmul(a: ZPoly, b: ZPoly) -> ZPoly:
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    if len(a) == 1:
        (ma, ca), = a.items()
        if not any(ma):
            return zscale(b, ca)
        return {tuple(x + y for x, y in zip(ma, mb)): ca * cb for mb, cb in b.items()}
    out: dict = {}
    get = out.get
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            out[m] = get(m, 0) + ca * cb
    return {m: c for m, c in out.items() if c}


def zpow(a: ZPoly, n: int, nvars: int) -> ZPoly:
    result = {(0,) * nvars: 1}
    base = a
    while n:
        if n & 1:
            result = zmul(result, base)
        n >>= 1
        if n:
            base = zmul(base, base)
    return result


def zmul_mono(a: ZPoly, mono: tuple, k: int = 1) -> ZPoly:
    return {tuple(x + y for x, y in zip(m, mono)): c * k for m, c in a.items()}


def zconst(c: int, nvars: int) -> ZPoly:
    return {(0,) * nvars: c} if c else {}


def zis_const(a: ZPoly) -> bool:
    if not a:
        return True
    if len(a) > 1:
        return False
    (m,) = a
    return not any(m)


def zdegree(a: ZPoly) -> int:
    return max((sum(m) for m in a), default=-1)


def zcontent(a: ZPoly) -> int:
    g = 0
    for c in a.values():
        g = igcd(g, c)
        if g == 1:
            break
    return g


def zlead(a: ZPoly) -> tuple:
    """Lexicographically largest exponent tuple."""
    return max(a)


def znormalize_sign(a: ZPoly) -> ZPoly:
    if a and a[max(a)] < 0:
        return zneg(a)
    return a


def zprimitive(a: ZPoly) -> tuple[int, ZPoly]:
    """Split into (signed content, primitive part with positive lex-leading coefficient)."""
    if not a:
        return 0, {}
    g = zcontent(a)
    if a[max(a)] < 0:
        g = -g
    if g == 1:
        return 1, a
    return g, {m: c // g for m, c in a.items()}


class NotDivisible(ArithmeticError):
    pass


def zdivexact(a: ZPoly, b: ZPoly) -> ZPoly:
    """Exact quotient a / b in Z[vars]; raises NotDivisible otherwise."""
    if not b:
        raise ZeroDivisionError("division by zero polynomial")
    if len(b) == 1:
        (mb, cb), = b.items()
        out = {}
        for m, c in a.items():
            q, r = divmod(c, cb)
            if r:
                raise NotDivisible
            mm = tuple(x - y for x, y in zip(m, mb))
            if min(mm, default=0) < 0:
                raise NotDivisible
            out[mm] = q
        return out
    lb = max(b)
    lcb = b[lb]
    rest = dict(a)
    q = {}
    # terms of b other than its leading one, pre-extracted
    tail = [(m, c) for m, c in b.items() if m != lb]
    while rest:
        m = max(rest)
        c = rest[m]
        t = tuple(x - y for x, y in zip(m, lb))
        if min(t) < 0:
            raise NotDivisible
        f, r = divmod(c, lcb)
        if r:
            raise NotDivisible
        q[t] = f
        del rest[m]
        for bm, bc in tail:
            mm = tuple(x + y for x, y in zip(bm, t))
            v = rest.get(mm, 0) - f * bc
            if v:
                rest[mm] = v
            else:
                rest.pop(mm, None)
    return q


def zmono_content(a: ZPoly) -> tuple:
    it = iter(a)
    g = list(next(it))
    for m in it:
        for i, e in enumerate(m):
            if e < g[i]:
                g[i] = e
    return tuple(g)


def zeval_int(a: ZPoly, point: list[int]) -> int:
    total = 0
    for m, c in a.items():
        t = c
        for v, e in zip(point, m):
            if e:
                t *= v**e
        total += t
    return total


# ---------------------------------------------------------------------------
# gcd: content extraction + recursive subresultant PRS on a main variable,
# fronted by a heuristic evaluation/interpolation gcd that is always verified


def _vars_used(a: ZPoly) -> set:
    used = set()
    for m in a:
        for i, e in enumerate(m):
            if e:
                used.add(i)
    return used


def _split(a: ZPoly, k: int) -> dict:
    """View as a univariate polynomial in variable k: {degree: coefficient dict}."""
    out: dict = {}
    for m, c in a.items():
        e = m[k]
        mm = m[:k] + (0,) + m[k + 1:] if e else m
        d = out.get(e)
        if d is None:
            out[e] = {mm: c}
        else:
            d[mm] = c
    return out


def _join(u: dict, k: int) -> ZPoly:
    out = {}
    for e, coeff in u.items():
        for m, c in coeff.items():
            out[m[:k] + (e,) + m[k + 1:] if e else m] = c
    return out


def _ucontent(u: dict, method: str = "auto") -> ZPoly:
    """gcd of the coefficients of a univariate-over-D polynomial."""
    coeffs = sorted(u.values(), key=len)
    g = coeffs[0]
    for c in coeffs[1:]:
        if zis_const(g) and abs(next(iter(g.values()), 0)) == 1:
            break
        g = zgcd(g, c, method)
    return g


def _prem(A: dict, dA: int, B: dict, dB: int) -> dict:
    """Pseudo-remainder lc(B)^(dA-dB+1) * A mod B for univariate-over-D dicts."""
    lcB = B[dB]
    R = dict(A)
    dR = dA
    delta = dA - dB + 1
    while R and dR >= dB:
        lcR = R[dR]
        shift = dR - dB
        newR = {}
        for e, c in R.items():
            if e == dR:
                continue
            newR[e] = zmul(lcB, c)
        for e, c in B.items():
            if e == dB:
                continue
            ee = e + shift
            v = zsub(newR.get(ee, {}), zmul(lcR, c))
            if v:
                newR[ee] = v
            else:
                newR.pop(ee, None)
        R = {e: c for e, c in newR.items() if c}
        dR = max(R, default=-1)
        delta -= 1
    if delta > 0 and R:
        f = lcB
        for _ in range(delta - 1):
            f = zmul(f, lcB)
        R = {e: zmul(f, c) for e, c in R.items()}
    return R


def _subresultant_gcd(A: dict, B: dict, nvars: int) -> dict:
    """Last nonzero subresultant-PRS remainder for primitive A, B (deg A >= deg B)."""
    one = zconst(1, nvars)
    g = one
    h = one
    dA = max(A)
    dB = max(B)
    while True:
        delta = dA - dB
        R = _prem(A, dA, B, dB)
        if not R:
            return B
        dR = max(R)
        if dR == 0:
            return {0: one}
        divisor = zmul(g, zpow(h, delta, nvars)) if delta else g
        A, dA = B, dB
        if zis_const(divisor) and divisor.get((0,) * nvars, 0) in (1, -1):
            s = divisor.get((0,) * nvars, 1)
            B = R if s == 1 else {e: zneg(c) for e, c in R.items()}
        else:
            B = {e: zdivexact(c, divisor) for e, c in R.items()}
        dB = dR
        g = A[dA]
        if delta == 0:
            pass
        elif delta == 1:
            h = g
        else:
            h = zdivexact(zpow(g, delta, nvars), zpow(h, delta - 1, nvars))


def zgcd(a: ZPoly, b: ZPoly, method: str = "auto") -> ZPoly:
    """Greatest common divisor in Z[vars], with positive lex-leading coefficient.

    ``method="auto"`` tries the evaluation/interpolation heuristic first and
    falls back to the subresultant PRS; ``"prs"`` uses the PRS only.
    """
    if not a:
        return zprimitive(b)[1] if b else {}
    if not b:
        return zprimitive(a)[1]
    if a == b:
        return znormalize_sign(a)
    nvars = len(next(iter(a)))
    # monomial content
    ma, mb = zmono_content(a), zmono_content(b)
    mg = mono = tuple(min(x, y) for x, y in zip(ma, mb))
    if any(ma):
        a = {tuple(x - y for x, y in zip(m, ma)): c for m, c in a.items()}
    if any(mb):
        b = {tuple(x - y for x, y in zip(m, mb)): c for m, c in b.items()}
    ca, a = zprimitive(a)
    cb, b = zprimitive(b)
    cg = igcd(ca, cb)
    g = _heuristic_gcd(a, b, nvars) if method == "auto" else None
    if g is None:
        g = _gcd_primitive(a, b, nvars, method)
    if any(mono):
        g = zmul_mono(g, mg)
    if cg != 1:
        g = zscale(g, cg)
    return g


def _gcd_primitive(a: ZPoly, b: ZPoly, nvars: int, method: str = "auto") -> ZPoly:
    one = zconst(1, nvars)
    if zis_const(a) or zis_const(b):
        return one
    if a == b:
        return a
    if len(a) == 1 or len(b) == 1:
        # with monomial and integer content removed, a monomial is 1
        return one
    va, vb = _vars_used(a), _vars_used(b)
    only_a = va - vb
    if only_a:
        k = min(only_a)
        return zgcd(_ucontent(_split(a, k), method), b, method)
    only_b = vb - va
    if only_b:
        k = min(only_b)
        return zgcd(a, _ucontent(_split(b, k), method), method)
    # main variable: smallest combined degree keeps the PRS short
    best = None
    for k in sorted(va):
        da = max(m[k] for m in a)
        db = max(m[k] for m in b)
        key = (max(da, db), da + db, k)
        if best is None or key < best[0]:
            best = (key, k)
    k = best[1]
    A, B = _split(a, k), _split(b, k)
    contA, contB = _ucontent(A, method), _ucontent(B, method)
    c = zgcd(contA, contB, method)
    if not (zis_const(contA) and contA.get((0,) * nvars) == 1):
        A = {e: zdivexact(v, contA) for e, v in A.items()}
    if not (zis_const(contB) and contB.get((0,) * nvars) == 1):
        B = {e: zdivexact(v, contB) for e, v in B.items()}
    if max(A) < max(B):
        A, B = B, A
    G = _subresultant_gcd(A, B, nvars)
    if max(G) == 0:
        g = one
    else:
        cG = _ucontent(G, method)
        G = {e: zdivexact(v, cG) for e, v in G.items()}
        g = znormalize_sign(_join(G, k))
    if not (zis_const(c) and c.get((0,) * nvars) == 1):
        g = zmul(g, c)
    return znormalize_sign(g)


def _max_norm(a: ZPoly) -> int:
    return max(abs(c) for c in a.values())


def _eval_var(a: ZPoly, k: int, v: int) -> ZPoly:
    out: dict = {}
    for m, c in a.items():
        e = m[k]
        if e:
            c *= v**e
            m = m[:k] + (0,) + m[k + 1:]
        out[m] = out.get(m, 0) + c
    return {m: c for m, c in out.items() if c}


def _interpolate(h: ZPoly, k: int, xi: int) -> ZPoly:
    """Recover a polynomial in variable k from its image at k = xi (symmetric xi-adic digits)."""
    out = {}
    half = xi // 2
    for m, c in h.items():
        e = 0
        while c:
            d = c % xi
            if d > half:
                d -= xi
            if d:
                out[m[:k] + (e,) + m[k + 1:]] = d
            c = (c - d) // xi
            e += 1
    return out


def _divides(d: ZPoly, a: ZPoly) -> bool:
    try:
        zdivexact(a, d)
    except NotDivisible:
        return False
    return True


def _heuristic_gcd(a: ZPoly, b: ZPoly, nvars: int, depth_vars=None):
    """Evaluation/interpolation gcd of primitive a, b; None when it gives up.

    Every candidate is confirmed by exact trial division, so a returned value
    is always the true gcd (up to sign); ``None`` sends the caller to the PRS.
    """
    used = _vars_used(a) | _vars_used(b)
    if not used:
        return zconst(igcd(next(iter(a.values())), next(iter(b.values()))), nvars)
    k = max(used)
    fn, gn = _max_norm(a), _max_norm(b)
    bound = 2 * min(fn, gn) + 29
    from math import isqrt

    xi = max(
        min(bound, 99 * isqrt(bound)),
        2 * min(fn // abs(a[max(a)]), gn // abs(b[max(b)])) + 2,
    )
    for _ in range(6):
        ea, eb = _eval_var(a, k, xi), _eval_var(b, k, xi)
        if ea and eb:
            ca, ea = zprimitive(ea)
            cb, eb = zprimitive(eb)
            h = _heuristic_gcd(ea, eb, nvars)
            if h is not None:
                h = zscale(h, igcd(ca, cb))
                cand = _interpolate(h, k, xi)
                if cand:
                    _, cand = zprimitive(cand)
                    if _divides(cand, a) and _divides(cand, b):
                        return cand
        xi = 73794 * xi * isqrt(isqrt(xi)) // 27011
    return None


# ---------------------------------------------------------------------------
# conversion from rational coefficients


def clear_denominators(terms: dict) -> tuple[ZPoly, int]:
    """Return (integer dict, d) with terms == integer dict / d."""
    d = 1
    for c in terms.values():
        if isinstance(c, Fraction) and c.denominator != 1:
            d = ilcm(d, c.denominator)
    out = {}
    for m, c in terms.items():
        if isinstance(c, Fraction):
            out[m] = c.numerator * (d // c.denominator)
        else:
            out[m] = c * d
    return out, d
