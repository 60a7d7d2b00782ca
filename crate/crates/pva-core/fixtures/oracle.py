"""Independent sympy expansion of the closed-form hierarchy entries that are
stated through operator applications (e.g. u^(-5/4) d^2 u^(-1/4)).

Prints fixture lines in the parser's grammar. Run: python3 oracle.py
"""
import sympy as sp

x = sp.Symbol("x")
alpha, beta = sp.symbols("alpha beta")
U = sp.Function("U")(x)
V = sp.Function("V")(x)


def d(e, k=1):
    return sp.diff(e, x, k)


def jet_name(f, k):
    base = "u" if f == U else "v"
    if k == 0:
        return base
    if k <= 3:
        return base + "'" * k
    return f"{base}^({k})"


def render(e):
    e = sp.expand(e)
    jets = {}
    for f in (U, V):
        for k in range(8, -1, -1):
            s = sp.Symbol(f"J_{'u' if f == U else 'v'}_{k}", positive=True)
            jets[s] = jet_name(f, k)
            e = e.subs(d(f, k) if k else f, s)
    e = sp.expand(e)
    if e == 0:
        return "0"
    out = []
    for term in sp.Add.make_args(e):
        coeff, rest = term.as_coeff_Mul()
        factors = []
        for b, p in sorted(rest.as_powers_dict().items(), key=lambda t: str(t[0])):
            name = jets.get(b, str(b))
            p = sp.Rational(p)
            if p == 1:
                factors.append(name)
            elif p.q == 1 and p > 0:
                factors.append(f"{name}^{p}")
            else:
                factors.append(f"{name}^({p})")
        c = sp.Rational(coeff)
        sign = "-" if c < 0 else "+"
        c = abs(c)
        body = "*".join(factors)
        txt = body if c == 1 and body else (f"{c}*{body}" if body else f"{c}")
        out.append((sign, txt))
    s = "".join(f" {sg} {t}" for sg, t in out).strip()
    return s[2:] if s.startswith("+ ") else "-" + s[2:]


def hd():
    h = lambda f: alpha * d(f) + beta * d(f, 3)
    F0 = U ** sp.Rational(-1, 2)
    F1 = alpha / 4 * U ** sp.Rational(-3, 2) + beta * U ** sp.Rational(-5, 4) * d(U ** sp.Rational(-1, 4), 2)
    F2 = (sp.Rational(3, 32) * alpha**2 * U ** sp.Rational(-5, 2)
          + sp.Rational(5, 12) * alpha * beta * U ** sp.Rational(-7, 4) * d(U ** sp.Rational(-3, 4), 2)
          + sp.Rational(1, 6) * beta**2 * U ** sp.Rational(-7, 4) * d(U ** sp.Rational(-3, 4), 4))
    h0 = 2 * U ** sp.Rational(1, 2)
    h1 = -alpha / 2 * U ** sp.Rational(-1, 2) - 2 * beta * U ** sp.Rational(-1, 4) * d(U ** sp.Rational(-1, 4), 2)
    h2 = (-sp.Rational(1, 16) * alpha**2 * U ** sp.Rational(-3, 2)
          - sp.Rational(5, 18) * alpha * beta * U ** sp.Rational(-3, 4) * d(U ** sp.Rational(-3, 4), 2)
          - sp.Rational(1, 9) * beta**2 * U ** sp.Rational(-3, 4) * d(U ** sp.Rational(-3, 4), 4))
    print("[hd]")
    for n, f in enumerate((F0, F1, F2)):
        print(f"F {n} = {render(f)}")
    for n, f in enumerate((h0, h1, h2)):
        print(f"h {n} = {render(f)}")
    for n, f in enumerate((F0, F1, F2)):
        print(f"flow {n} = {render(h(f))}")


def cnw_hd():
    H = lambda f: (alpha * d(f[0]) + beta * d(f[0], 3), alpha * d(f[1]))
    F0 = (sp.Integer(0), sp.Integer(1))
    F1 = (1 / V, -U / V**2)
    F2 = (-alpha * U / V**3,
          alpha * (sp.Rational(3, 2) * U**2 / V**4 + 1 / (2 * V**2))
          + beta * (sp.Rational(3, 2) * d(V) ** 2 / V**4 - d(V, 2) / V**3))
    h = (V, U / V, alpha * (-U**2 / (2 * V**3) - 1 / (2 * V)) + beta * d(V) ** 2 / (2 * V**3))
    print("[cnw_hd]")
    for n, f in enumerate((F0, F1, F2)):
        print(f"F {n} = ({render(f[0])}, {render(f[1])})")
    for n, f in enumerate(h):
        print(f"h {n} = {render(f)}")
    for n, f in enumerate((F0, F1, F2)):
        g = H(f)
        print(f"flow {n} = ({render(g[0])}, {render(g[1])})")


if __name__ == "__main__":
    hd()
    print()
    cnw_hd()
