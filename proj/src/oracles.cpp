#include "ucps/oracles.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace ucps {
namespace {

constexpr double kPi = 3.14159265358979323846;

const std::pair<RealVector, RealVector>& cached_gl(int order) {
  static std::mutex mu;
  static std::map<int, std::pair<RealVector, RealVector>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) {
    RealVector x, w;
    gauss_legendre(order, x, w);
    it = cache.emplace(order, std::make_pair(std::move(x), std::move(w)))
             .first;
  }
  return it->second;
}

double adaptive_panel(const std::function<double(double)>& f, double a,
                      double b, double whole, double rel_tol, int order,
                      int depth, double scale) {
  const double m = 0.5 * (a + b);
  const double left = integrate_gl(f, a, m, order);
  const double right = integrate_gl(f, m, b, order);
  const double refined = left + right;
  if (std::abs(refined - whole) <=
          rel_tol * std::max(scale, std::abs(refined)) ||
      depth <= 0)
    return refined;
  return adaptive_panel(f, a, m, left, rel_tol, order, depth - 1, scale) +
         adaptive_panel(f, m, b, right, rel_tol, order, depth - 1, scale);
}

// Bogoliubov angle of the transverse-field fermion dispersion.
double bogoliubov_theta(double h, double k) {
  return std::atan2(std::sin(k), h - std::cos(k));
}

double dispersion(double h, double k) {
  return 2.0 * std::sqrt(1.0 + h * h - 2.0 * h * std::cos(k));
}

}  // namespace

void gauss_legendre(int order, RealVector& nodes, RealVector& weights) {
  if (order < 1) throw InvalidArgument("gauss_legendre: order must be >= 1");
  nodes.resize(order);
  weights.resize(order);
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p_prev = 1.0, p = x;
      for (int j = 2; j <= order; ++j) {
        const double p_new = ((2.0 * j - 1.0) * x * p - (j - 1.0) * p_prev) / j;
        p_prev = p;
        p = p_new;
      }
      dp = order * (x * p - p_prev) / (x * x - 1.0);
      const double dx = -p / dp;
      x += dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes(i) = -x;
    nodes(order - 1 - i) = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights(i) = w;
    weights(order - 1 - i) = w;
  }
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int order) {
  const auto& [x, w] = cached_gl(order);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < order; ++i) sum += w(i) * f(mid + half * x(i));
  return half * sum;
}

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol, int order, int max_depth) {
  const double whole = integrate_gl(f, a, b, order);
  const double scale = std::max(1e-300, std::abs(whole));
  return adaptive_panel(f, a, b, whole, rel_tol, order, max_depth, scale);
}

double ising_ground_energy(double h, int order) {
  if (h < 0.0) throw InvalidArgument("ising_ground_energy: h must be >= 0");
  const auto eps = [h](double k) { return dispersion(h, k); };
  return -integrate_gl(eps, 0.0, kPi, order) / (2.0 * kPi);
}

double xy_ground_energy(double h, double gamma, int order) {
  if (!std::isfinite(h) || !std::isfinite(gamma))
    throw InvalidArgument("xy_ground_energy: parameters must be finite");
  const auto eps = [h, gamma](double k) {
    const double a = h - std::cos(k);
    const double b = gamma * std::sin(k);
    return 2.0 * std::sqrt(a * a + b * b);
  };
  // gamma near 0 has a |.| kink where cos k = h; refine adaptively.
  const int panel = std::min(order, 64);
  return -integrate_adaptive(eps, 0.0, kPi, 1e-14, panel) / (2.0 * kPi);
}

double ising_quench_rate(double h0, double h1, double t, int order) {
  if (t == 0.0 || h0 == h1) return 0.0;
  const auto g = [h0, h1, t](double k) {
    const double phi =
        0.5 * (bogoliubov_theta(h1, k) - bogoliubov_theta(h0, k));
    const double c2 = std::cos(phi) * std::cos(phi);
    const double s2 = 1.0 - c2;
    const double arg = 2.0 * dispersion(h1, k) * t;
    const double re = c2 + s2 * std::cos(arg);
    const double im = -s2 * std::sin(arg);
    return 0.5 * std::log(re * re + im * im);
  };
  const int panel = std::max(64, order / 8);
  return -integrate_adaptive(g, 0.0, kPi, 1e-13, panel) / kPi;
}

std::vector<double> critical_times(double h0, double h1, int count) {
  const double ck = (1.0 + h0 * h1) / (h0 + h1);
  if (!(std::abs(ck) <= 1.0)) return {};
  const double eps_star = 2.0 * std::sqrt(1.0 + h1 * h1 - 2.0 * h1 * ck);
  std::vector<double> out;
  for (int m = 0; m < count; ++m)
    out.push_back(kPi / eps_star * (m + 0.5));
  return out;
}

double heisenberg_ground_energy() { return 1.0 - 4.0 * std::log(2.0); }

QuenchOracle::QuenchOracle(double h0_, double h1_, int order_)
    : h0(h0_), h1(h1_), order(order_) {
  if (order < 256)
    throw InvalidArgument("QuenchOracle: quadrature order must be >= 256");
}

double QuenchOracle::rate(double t) const {
  return ising_quench_rate(h0, h1, t, order);
}

std::vector<double> QuenchOracle::times(int count) const {
  return critical_times(h0, h1, count);
}

std::pair<double, Vector> exact_diag_ground(const std::vector<LocalTerm>& terms,
                                            int n_sites, bool periodic) {
  if (n_sites < 1 || n_sites > 14)
    throw InvalidArgument("exact_diag_ground: need 1 <= n_sites <= 14");
  const long dim = 1L << n_sites;

  struct OneSite {
    Matrix op;
    int site;
    double coeff;
  };
  struct TwoSite {
    Matrix a, b;
    int s1, s2;
    double coeff;
  };
  std::vector<OneSite> ones;
  std::vector<TwoSite> twos;
  for (const auto& t : terms) {
    if (t.kind == LocalTerm::Kind::one_site) {
      for (int s = 0; s < n_sites; ++s) ones.push_back({t.op_a, s, t.coefficient});
    } else {
      if (n_sites < 2)
        throw InvalidArgument("exact_diag_ground: two-site term on one site");
      const int last = periodic ? n_sites : n_sites - 1;
      for (int s = 0; s < last; ++s)
        twos.push_back({t.op_a, t.op_b, s, (s + 1) % n_sites, t.coefficient});
    }
  }

  const auto matvec = [&](const Vector& v) {
    Vector w = Vector::Zero(dim);
    for (const auto& o : ones) {
      const long mask = 1L << o.site;
      for (long x = 0; x < dim; ++x) {
        const int beta = (x >> o.site) & 1;
        for (int bp = 0; bp < 2; ++bp) {
          const Complex c = o.op(bp, beta);
          if (c == Complex(0.0)) continue;
          const long xp = (x & ~mask) | (static_cast<long>(bp) << o.site);
          w(xp) += o.coeff * c * v(x);
        }
      }
    }
    for (const auto& tw : twos) {
      const long m1 = 1L << tw.s1, m2 = 1L << tw.s2;
      for (long x = 0; x < dim; ++x) {
        const int b1 = (x >> tw.s1) & 1, b2 = (x >> tw.s2) & 1;
        for (int b1p = 0; b1p < 2; ++b1p)
          for (int b2p = 0; b2p < 2; ++b2p) {
            const Complex c = tw.a(b1p, b1) * tw.b(b2p, b2);
            if (c == Complex(0.0)) continue;
            const long xp = (x & ~m1 & ~m2) | (static_cast<long>(b1p) << tw.s1) |
                            (static_cast<long>(b2p) << tw.s2);
            w(xp) += tw.coeff * c * v(x);
          }
      }
    }
    return w;
  };

  // Lanczos with full reorthogonalisation.
  const int m_max = static_cast<int>(std::min<long>(dim, 240));
  std::vector<Vector> V;
  std::vector<double> alpha, beta;
  Rng rng(20240901u);
  Vector v0(dim);
  for (long i = 0; i < dim; ++i) v0(i) = rng.complex_gaussian();
  v0.normalize();
  V.push_back(v0);

  double e_prev = 0.0;
  bool have_prev = false;
  int stable = 0;
  for (int j = 0; j < m_max; ++j) {
    Vector w = matvec(V[j]);
    const Complex a_c = V[j].dot(w);
    if (std::abs(a_c.imag()) > 1e-8 * std::max(1.0, std::abs(a_c)))
      throw Error("exact_diag_ground: Hamiltonian is not Hermitian");
    alpha.push_back(a_c.real());
    w -= alpha[j] * V[j];
    if (j > 0) w -= beta[j - 1] * V[j - 1];
    for (const auto& vi : V) w -= vi.dot(w) * vi;
    for (const auto& vi : V) w -= vi.dot(w) * vi;
    const double b = w.norm();

    const int k = j + 1;
    Eigen::SelfAdjointEigenSolver<RealMatrix> es;
    RealVector ad = Eigen::Map<const RealVector>(alpha.data(), k);
    RealVector bd = beta.empty()
                        ? RealVector()
                        : Eigen::Map<const RealVector>(beta.data(), k - 1);
    es.computeFromTridiagonal(ad, bd);
    const double e0 = es.eigenvalues()(0);
    if (have_prev && std::abs(e0 - e_prev) <= 1e-14 * std::max(1.0, std::abs(e0)))
      ++stable;
    else
      stable = 0;
    e_prev = e0;
    have_prev = true;
    if (stable >= 2 || b < 1e-12 * std::max(1.0, std::abs(e0)) ||
        k == m_max)
      break;
    beta.push_back(b);
    V.push_back(w / b);
  }

  const int k = static_cast<int>(alpha.size());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es;
  RealVector ad = Eigen::Map<const RealVector>(alpha.data(), k);
  RealVector bd = beta.empty()
                      ? RealVector()
                      : Eigen::Map<const RealVector>(
                            beta.data(), static_cast<int>(beta.size()));
  es.computeFromTridiagonal(ad.head(k), bd.head(k - 1 < 0 ? 0 : k - 1),
                            Eigen::ComputeEigenvectors);
  const RealVector s = es.eigenvectors().col(0);
  Vector ground = Vector::Zero(dim);
  for (int i = 0; i < k && i < static_cast<int>(V.size()); ++i)
    ground += s(i) * V[i];
  ground.normalize();
  return {es.eigenvalues()(0) / n_sites, ground};
}

}  // namespace ucps
