"""Independent reference values for the C++ tests (scipy quadrature)."""
import math
from scipy import integrate, optimize, stats


def gumbel(u, v, th):
    if u <= 0 or v <= 0:
        return 0.0
    x, y = -math.log(u), -math.log(v)
    return math.exp(-((x**th + y**th) ** (1 / th)))


def gumbel_partials(u, v, th):
    x, y = -math.log(u), -math.log(v)
    a = x**th + y**th
    c = math.exp(-(a ** (1 / th)))
    common = c * a ** (1 / th - 1)
    return common * x ** (th - 1) / u, common * y ** (th - 1) / v


def spearman(th):
    val, _ = integrate.dblquad(lambda v, u: gumbel(u, v, th), 0, 1, 0, 1,
                               epsabs=1e-12, epsrel=1e-12)
    return 12 * val - 3


def theta_from_spearman(rho):
    return optimize.brentq(lambda t: spearman(t) - rho, 1.0, 50.0, xtol=1e-13)


class Law:
    """Gumbel copula on the distribution functions of two Weibull margins."""

    def __init__(self, p1, p2, k1, k2, hr1, hr2, th, terminal):
        self.k1, self.k2, self.hr1, self.hr2, self.th = k1, k2, hr1, hr2, th
        self.H1 = -math.log1p(-p1)
        self.H2 = -math.log1p(-p2)
        if terminal:
            self.H2 = optimize.brentq(lambda h: self._obs2(h) - p2, self.H2, 60.0, xtol=1e-14)

    def _margins(self, t, arm, H2=None):
        H2 = self.H2 if H2 is None else H2
        h1, h2 = self.H1 * t**self.k1, H2 * t**self.k2
        d1, d2 = self.H1 * self.k1 * t ** (self.k1 - 1), H2 * self.k2 * t ** (self.k2 - 1)
        if arm == 1:
            h1, h2, d1, d2 = h1 * self.hr1, h2 * self.hr2, d1 * self.hr1, d2 * self.hr2
        s1, s2 = math.exp(-h1), math.exp(-h2)
        return s1, s2, d1 * s1, d2 * s2

    def _obs2(self, H2):
        def g(t):
            s1, s2, f1, f2 = self._margins(t, 0, H2)
            _, cv = gumbel_partials(1 - s1, 1 - s2, self.th)
            return f2 * (1 - cv)
        return quad(g)

    def surv(self, t, arm):
        s1, s2, _, _ = self._margins(t, arm)
        return s1 + s2 - 1 + gumbel(1 - s1, 1 - s2, self.th)

    def dens(self, t, arm):
        s1, s2, f1, f2 = self._margins(t, arm)
        cu, cv = gumbel_partials(1 - s1, 1 - s2, self.th)
        return f1 * (1 - cu) + f2 * (1 - cv)

    def hr_star(self, t):
        return (self.dens(t, 1) / self.surv(t, 1)) / (self.dens(t, 0) / self.surv(t, 0))


def quad(g):
    # t = s^2 removes the t^(-1/2) head of decreasing hazards
    val, _ = integrate.quad(lambda s: g(s * s) * 2 * s, 0, 1, epsabs=1e-14, epsrel=1e-12,
                            limit=500)
    return val


def are(law, p1):
    pstar = 1 - law.surv(1.0, 0)
    m = quad(lambda t: math.log(law.hr_star(t)) * law.dens(t, 0))
    return m * m / (math.log(law.hr1) ** 2 * p1 * pstar), math.exp(m / pstar), pstar


def freedman(hr, pbar, z):
    e = ((1 + hr) / (1 - hr)) ** 2 * z * z
    return e, 2 * math.ceil(e / pbar / 2)


def binary_n(pc, pt, za, zb):
    pbar = (pc + pt) / 2
    num = za * math.sqrt(2 * pbar * (1 - pbar)) + zb * math.sqrt(pc * (1 - pc) + pt * (1 - pt))
    return (num / (pc - pt)) ** 2


if __name__ == "__main__":
    za, zb = stats.norm.ppf(0.95), stats.norm.ppf(0.80)
    print("z95 %.17g z80 %.17g z975 %.17g" % (za, zb, stats.norm.ppf(0.975)))
    print("spearman(2) %.15g" % spearman(2.0))
    th = theta_from_spearman(0.7)
    print("theta(0.7) %.15g" % th)
    print("theta(0.3) %.15g" % theta_from_spearman(0.3))
    shapes = {"constant": 1.0, "increasing": 2.0, "decreasing": 0.5}
    rows = [("increasing", "decreasing"), ("increasing", "constant"), ("constant", "constant"),
            ("constant", "increasing"), ("decreasing", "increasing")]
    for a, b in rows:
        law = Law(0.125, 0.05, shapes[a], shapes[b], 0.83, 0.66, th, True)
        r, ghr, ps = are(law, 0.125)
        p1t = 1 - math.exp(-0.83 * law.H1)
        pst = 1 - law.surv(1.0, 1)
        e, n = freedman(ghr, (ps + pst) / 2, za + zb)
        print("%s/%s ARE %.12g gHR %.12g p*0 %.12g E %.10g n %d" % (a, b, r, ghr, ps, e, n))
    law = Law(0.125, 0.05, 1, 1, 0.83, 0.66, th, False)
    print("non-terminal constant ARE %.12g" % are(law, 0.125)[0])
    p1, p2, d1, d2 = 0.059, 0.032, 0.0196, 0.0098
    for rho in (0.1, 0.4, 0.7):
        def p12(a, b):
            return a * b + rho * math.sqrt(a * (1 - a) * b * (1 - b))
        pc = p1 + p2 - p12(p1, p2)
        pt = (p1 - d1) + (p2 - d2) - p12(p1 - d1, p2 - d2)
        nc = binary_n(pc, pt, za, zb)
        nr = binary_n(p1, p1 - d1, za, zb)
        print("rho %.1f p* %.12g delta* %.12g c12 %.12g c21 %.12g n* %.10g N %d ARE %.12g" % (
            rho, pc, pc - pt, p12(p1, p2) / p2, p12(p1, p2) / p1, nc, 2 * math.ceil(nc), nr / nc))
