#include "qbai/dist.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace qbai::dist {
namespace {

constexpr double kMassTol = 1e-9;

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

// Drops knots that only repeat F = 0 at the front or F = 1 at the back.
void trim_flat_ends(std::vector<CdfKnot>& knots) {
  while (knots.size() >= 2 && knots[0].right == 0.0 && knots[1].left == 0.0) {
    knots.erase(knots.begin());
  }
  while (knots.size() >= 2 && knots.back().left == 1.0 && knots[knots.size() - 2].right == 1.0) {
    knots.pop_back();
  }
}

std::vector<double> sorted_unique(std::vector<double> xs) {
  std::ranges::sort(xs);
  auto [first, last] = std::ranges::unique(xs);
  xs.erase(first, last);
  return xs;
}

std::vector<Point> sorted_merged_points(std::vector<Point> pts, const char* what) {
  for (const auto& [x, m] : pts) {
    if (!std::isfinite(x)) fail(std::string(what) + ": non-finite location");
    if (!(m > 0.0) || !std::isfinite(m)) fail(std::string(what) + ": masses must be positive");
  }
  std::ranges::sort(pts);
  std::vector<Point> out;
  for (const auto& p : pts) {
    if (!out.empty() && out.back().first == p.first) {
      out.back().second += p.second;
    } else {
      out.push_back(p);
    }
  }
  return out;
}

PiecewiseCdf atoms_shape(const std::vector<Point>& atoms) {
  std::vector<CdfKnot> knots;
  double cum = 0.0;
  for (const auto& [x, m] : atoms) {
    knots.push_back({x, cum, cum + m});
    cum += m;
  }
  return PiecewiseCdf::make(std::move(knots));
}

PiecewiseCdf piecewise_shape(const std::vector<Point>& knots, const std::vector<Point>& atoms_in) {
  const auto atoms = sorted_merged_points(atoms_in, "piecewise atoms");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i].first) || !std::isfinite(knots[i].second)) {
      fail("piecewise knots must be finite");
    }
    if (i > 0 && !(knots[i].first > knots[i - 1].first)) {
      fail("piecewise knot locations must be strictly increasing");
    }
    if (i > 0 && knots[i].second < knots[i - 1].second) {
      fail("piecewise knot masses must be non-decreasing");
    }
  }
  if (!knots.empty() && std::abs(knots.front().second) > kMassTol) {
    fail("piecewise continuous mass must start at 0");
  }
  const double continuous = knots.empty() ? 0.0 : knots.back().second;
  double atom_mass = 0.0;
  for (const auto& a : atoms) atom_mass += a.second;
  if (std::abs(continuous + atom_mass - 1.0) > kMassTol) fail("piecewise total mass must be 1");
  if (knots.empty() && atoms.empty()) fail("piecewise distribution has no mass");

  auto cont = [&](double x) {
    if (knots.empty() || x <= knots.front().first) return 0.0;
    if (x >= knots.back().first) return continuous;
    auto it = std::ranges::upper_bound(knots, x, {}, &Point::first);
    const auto& lo = *(it - 1);
    const auto& hi = *it;
    return lo.second + (hi.second - lo.second) * (x - lo.first) / (hi.first - lo.first);
  };

  std::vector<double> xs;
  for (const auto& k : knots) xs.push_back(k.first);
  for (const auto& a : atoms) xs.push_back(a.first);
  xs = sorted_unique(std::move(xs));

  std::vector<CdfKnot> out;
  out.reserve(xs.size());
  double below = 0.0;  // atom mass strictly below the current point
  std::size_t ai = 0;
  for (double x : xs) {
    double at = 0.0;
    if (ai < atoms.size() && atoms[ai].first == x) at = atoms[ai++].second;
    const double c = cont(x);
    out.push_back({x, c + below, c + below + at});
    below += at;
  }
  return PiecewiseCdf::make(std::move(out));
}

PiecewiseCdf shape_of(const Family& family) {
  return std::visit(
      [](const auto& f) -> PiecewiseCdf {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, DiracUniformMixture>) {
          if (!(f.w >= 0.0 && f.w < 1.0)) fail("mixture weight w must lie in [0, 1)");
          return PiecewiseCdf::make({{0.0, 0.0, f.w}, {1.0, 1.0, 1.0}});
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          if (!std::isfinite(f.r)) fail("deterministic reward must be finite");
          return PiecewiseCdf::make({{f.r, 0.0, 1.0}});
        } else if constexpr (std::is_same_v<T, Discrete>) {
          if (f.support.empty()) fail("discrete support is empty");
          auto atoms = sorted_merged_points(f.support, "discrete support");
          double total = 0.0;
          for (const auto& a : atoms) total += a.second;
          if (std::abs(total - 1.0) > kMassTol) fail("discrete masses must sum to 1");
          return atoms_shape(atoms);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          if (!std::isfinite(f.a) || !std::isfinite(f.b) || !(f.a < f.b)) {
            fail("uniform requires finite a < b");
          }
          return PiecewiseCdf::make({{f.a, 0.0, 0.0}, {f.b, 1.0, 1.0}});
        } else {
          return piecewise_shape(f.knots, f.atoms);
        }
      },
      family);
}

}  // namespace

PiecewiseCdf PiecewiseCdf::make(std::vector<CdfKnot> knots) {
  if (knots.empty()) fail("cdf needs at least one breakpoint");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    auto& k = knots[i];
    if (!std::isfinite(k.x)) fail("cdf breakpoints must be finite");
    if (i > 0 && !(k.x > knots[i - 1].x)) fail("cdf breakpoints must be strictly increasing");
    if (k.left < -kMassTol || k.right > 1.0 + kMassTol || k.right < k.left - kMassTol) {
      fail("cdf values out of range");
    }
    if (i > 0 && k.left < knots[i - 1].right - kMassTol) fail("cdf must be non-decreasing");
  }
  if (std::abs(knots.front().left) > kMassTol) fail("cdf must start at 0");
  if (std::abs(knots.back().right - 1.0) > kMassTol) fail("cdf must end at 1");

  // Absorb rounding noise so the stored values are exactly monotone in [0, 1].
  double floor = 0.0;
  knots.front().left = 0.0;
  for (auto& k : knots) {
    k.left = std::clamp(std::max(k.left, floor), 0.0, 1.0);
    k.right = std::clamp(std::max(k.right, k.left), 0.0, 1.0);
    floor = k.right;
  }
  knots.back().right = 1.0;
  return PiecewiseCdf(std::move(knots));
}

double PiecewiseCdf::cdf(double x) const {
  if (!(x >= knots_.front().x)) return 0.0;
  if (x >= knots_.back().x) return 1.0;
  auto it = std::ranges::upper_bound(knots_, x, {}, &CdfKnot::x);
  const auto& lo = *(it - 1);
  if (x == lo.x) return lo.right;
  return lo.right + (it->left - lo.right) * (x - lo.x) / (it->x - lo.x);
}

double PiecewiseCdf::cdf_left(double x) const {
  if (x <= knots_.front().x) return 0.0;
  if (x > knots_.back().x) return 1.0;
  auto it = std::ranges::lower_bound(knots_, x, {}, &CdfKnot::x);
  if (it->x == x) return it->left;
  const auto& lo = *(it - 1);
  return lo.right + (it->left - lo.right) * (x - lo.x) / (it->x - lo.x);
}

ExtendedReal PiecewiseCdf::lower_quantile(double p) const {
  if (!(p > 0.0)) return kNegInf;
  p = std::min(p, 1.0);
  auto it = std::ranges::lower_bound(knots_, p, {}, &CdfKnot::right);
  if (it == knots_.end()) --it;
  if (it == knots_.begin() || it->left < p) return it->x;
  const auto& lo = *(it - 1);
  const double x = lo.x + (p - lo.right) / (it->left - lo.right) * (it->x - lo.x);
  return std::min(x, it->x);
}

ExtendedReal PiecewiseCdf::upper_quantile(double p) const {
  if (!(p < 1.0)) return kPosInf;
  if (p < 0.0) return kNegInf;
  auto it = std::ranges::upper_bound(knots_, p, {}, &CdfKnot::left);
  const auto& lo = *(it - 1);
  if (lo.right > p) return lo.x;
  const double x = lo.x + (p - lo.right) / (it->left - lo.right) * (it->x - lo.x);
  return std::min(x, it->x);
}

double total_variation(const PiecewiseCdf& f, const PiecewiseCdf& g) {
  std::vector<double> xs;
  for (const auto& k : f.knots()) xs.push_back(k.x);
  for (const auto& k : g.knots()) xs.push_back(k.x);
  xs = sorted_unique(std::move(xs));
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    sum += std::abs((f.cdf(x) - f.cdf_left(x)) - (g.cdf(x) - g.cdf_left(x)));
    if (i + 1 < xs.size()) {
      const double y = xs[i + 1];
      sum += std::abs((f.cdf_left(y) - f.cdf(x)) - (g.cdf_left(y) - g.cdf(x)));
    }
  }
  return 0.5 * sum;
}

RewardDistribution RewardDistribution::dirac_uniform_mixture(double w) {
  return from_family(DiracUniformMixture{w});
}
RewardDistribution RewardDistribution::deterministic(double r) {
  return from_family(Deterministic{r});
}
RewardDistribution RewardDistribution::discrete(std::vector<Point> support) {
  return from_family(Discrete{std::move(support)});
}
RewardDistribution RewardDistribution::uniform(double a, double b) {
  return from_family(Uniform{a, b});
}
RewardDistribution RewardDistribution::piecewise(std::vector<Point> knots,
                                                 std::vector<Point> atoms) {
  return from_family(Piecewise{std::move(knots), std::move(atoms)});
}

RewardDistribution RewardDistribution::from_family(Family family) {
  auto shape = shape_of(family);
  return RewardDistribution(std::move(family), std::move(shape));
}

RewardDistribution RewardDistribution::from_cdf(const PiecewiseCdf& cdf) {
  const auto knots = cdf.knots();
  std::vector<Point> atoms;
  bool continuous = false;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (knots[i].right > knots[i].left) atoms.emplace_back(knots[i].x, knots[i].right - knots[i].left);
    if (i + 1 < knots.size() && knots[i + 1].left - knots[i].right > 1e-14) continuous = true;
  }
  if (!continuous) {
    if (atoms.size() == 1) return deterministic(atoms.front().first);
    return discrete(std::move(atoms));
  }
  std::vector<Point> cont;
  double below = 0.0;
  double last = 0.0;
  for (const auto& k : knots) {
    last = std::max(last, k.left - below);
    cont.emplace_back(k.x, last);
    below += k.right - k.left;
  }
  cont.front().second = 0.0;
  return piecewise(std::move(cont), std::move(atoms));
}

std::string_view RewardDistribution::family_name() const {
  static constexpr std::string_view kNames[] = {"dirac_uniform_mixture", "deterministic",
                                                "discrete", "uniform", "piecewise"};
  return kNames[family_.index()];
}

Instance::Instance(std::vector<RewardDistribution> arms, double q, double lambda)
    : arms_(std::move(arms)), q_(q), lambda_(lambda) {
  if (arms_.empty()) fail("instance needs at least one arm");
  if (!(q_ > 0.0 && q_ < 1.0)) fail("q must lie in (0, 1)");
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) fail("lambda must be positive and finite");
  for (std::size_t k = 0; k < arms_.size(); ++k) {
    const double qk = arms_[k].lower_quantile(q_);
    if (!(qk >= 0.0 && qk <= lambda_)) {
      fail("arm " + std::to_string(k + 1) + " has q-quantile " + std::to_string(qk) +
           " outside [0, lambda]");
    }
  }
}

std::vector<double> Instance::quantiles() const {
  std::vector<double> out;
  out.reserve(arms_.size());
  for (const auto& a : arms_) out.push_back(a.lower_quantile(q_));
  return out;
}

bool SatisfyingSet::contains(std::size_t k) const {
  return std::ranges::binary_search(members, k);
}

SatisfyingSet satisfying_set(const Instance& inst, double eps) {
  if (!(eps >= 0.0)) fail("eps must be nonnegative");
  const auto qs = inst.quantiles();
  const double best = *std::ranges::max_element(qs);
  SatisfyingSet out{eps, {}};
  for (std::size_t k = 0; k < qs.size(); ++k) {
    if (qs[k] >= best - eps) out.members.push_back(k);
  }
  return out;
}

double mixture_quantile(double w, double p) {
  if (!(p > 0.0 && p <= 1.0)) fail("p must lie in (0, 1]");
  return RewardDistribution::dirac_uniform_mixture(w).lower_quantile(p);
}

Instance make_lower_bound_instance(std::size_t arms, double gamma,
                                   std::optional<std::size_t> modified_arm, double q) {
  if (arms < 2) fail("lower-bound instance needs K >= 2");
  if (!(gamma > 0.0 && gamma <= 1.0 / 6.0 + 1e-12)) fail("gamma must lie in (0, 1/6]");
  if (modified_arm) {
    if (*modified_arm == 0) fail("arm 1 cannot be the modified arm; omit j for nu^(1)");
    if (*modified_arm >= arms) fail("modified arm index out of range");
  }
  std::vector<RewardDistribution> out;
  out.push_back(RewardDistribution::dirac_uniform_mixture(1.0 / 3.0 - gamma));
  for (std::size_t k = 1; k < arms; ++k) {
    const double w = (modified_arm && *modified_arm == k) ? 1.0 / 3.0 - 2.0 * gamma : 1.0 / 3.0;
    out.push_back(RewardDistribution::dirac_uniform_mixture(w));
  }
  return Instance(std::move(out), q, 1.0);
}

Instance make_prop13_instance(double m1, double m2, double eps, std::optional<double> lambda) {
  if (!(m1 > 0.0) || !std::isfinite(m1)) fail("m1 must be positive");
  if (!(eps > 0.0)) fail("eps must be positive");
  if (!(m2 > m1 - eps / 2.0 && m2 < m1)) fail("m2 must lie in (m1 - eps/2, m1)");
  if (m2 < 0.0) fail("m2 must be nonnegative");
  const double lam = lambda.value_or(2.0 * m1);
  if (!(lam >= 2.0 * eps)) fail("lambda must be at least 2 eps");
  std::vector<RewardDistribution> arms{
      RewardDistribution::uniform(0.0, 2.0 * m1),
      RewardDistribution::discrete({{m2, 0.5}, {2.0 * m1, 0.5}}),
  };
  return Instance(std::move(arms), 0.5, lam);
}

Instance make_appendix_f1_instance(double lambda, double eps) {
  if (!(eps > 0.0)) fail("eps must be positive");
  if (!(lambda >= 2.0 * eps) || !std::isfinite(lambda)) fail("lambda must be at least 2 eps");
  const auto arm = RewardDistribution::discrete({{lambda - eps / 3.0, 0.5}, {2.0 * lambda, 0.5}});
  return Instance({arm, arm}, 0.5, lambda);
}

Instance clip(const Instance& inst) {
  const double lam = inst.lambda();
  std::vector<RewardDistribution> arms;
  for (const auto& arm : inst.arms()) {
    if (arm.supported_on(0.0, lam)) {
      arms.push_back(arm);
      continue;
    }
    std::vector<CdfKnot> knots{{0.0, 0.0, arm.cdf(0.0)}};
    for (const auto& k : arm.shape().knots()) {
      if (k.x > 0.0 && k.x < lam) knots.push_back(k);
    }
    knots.push_back({lam, arm.cdf_left(lam), 1.0});
    trim_flat_ends(knots);
    arms.push_back(RewardDistribution::from_cdf(PiecewiseCdf::make(std::move(knots))));
  }
  return Instance(std::move(arms), inst.q(), lam);
}

namespace {

template <class Left, class Right>
PiecewiseCdf rebuild(std::vector<double> breaks, Left left, Right right) {
  breaks = sorted_unique(std::move(breaks));
  std::vector<CdfKnot> knots;
  knots.reserve(breaks.size());
  for (double b : breaks) knots.push_back({b, left(b), right(b)});
  trim_flat_ends(knots);
  return PiecewiseCdf::make(std::move(knots));
}

std::vector<double> knot_locations(const PiecewiseCdf& f) {
  std::vector<double> xs;
  for (const auto& k : f.knots()) xs.push_back(k.x);
  return xs;
}

}  // namespace

Instance perturb(const Instance& inst, std::size_t k, std::size_t a, double eta) {
  const std::size_t K = inst.size();
  if (k >= K || a >= K) fail("perturb arm index out of range");
  if (k == a) fail("perturb needs two distinct arms");
  if (!(eta >= 0.0) || !std::isfinite(eta)) fail("eta must be nonnegative");
  if (eta == 0.0) return inst;
  const double q = inst.q();
  const double lam = inst.lambda();
  if (!(q - 2.0 * eta > 0.0) || !(q + 2.0 * eta <= 1.0)) {
    fail("target quantile outside [0, lambda]: q -/+ 2 eta leaves (0, 1]");
  }

  // Arm a: the lowest eta of mass below Q_a(q) moves up to Q_a(q + 2 eta).
  const auto& fa = inst.arm(a).shape();
  const double qa = fa.lower_quantile(q);
  if (fa.cdf_left(qa) < eta) fail("insufficient source mass below Q_a(q)");
  const double ta = fa.lower_quantile(q + 2.0 * eta);
  const double new_qa = fa.lower_quantile(q + eta);
  if (!(new_qa >= 0.0 && new_qa <= lam)) fail("target quantile outside [0, lambda]");
  auto breaks_a = knot_locations(fa);
  breaks_a.push_back(fa.lower_quantile(eta));
  breaks_a.push_back(ta);
  const auto ga = rebuild(
      std::move(breaks_a),
      [&](double x) { return x <= ta ? std::max(fa.cdf_left(x) - eta, 0.0) : fa.cdf_left(x); },
      [&](double x) { return x < ta ? std::max(fa.cdf(x) - eta, 0.0) : fa.cdf(x); });

  // Arm k: the lowest eta of mass above Q_k(q) moves down to Q_k(q - 2 eta).
  const auto& fk = inst.arm(k).shape();
  const double qk = fk.lower_quantile(q);
  const double at_qk = fk.cdf(qk);
  if (1.0 - at_qk < eta) fail("insufficient source mass above Q_k(q)");
  const double sk = fk.lower_quantile(q - 2.0 * eta);
  const double new_qk = fk.lower_quantile(q - eta);
  if (!(new_qk >= 0.0 && new_qk <= lam)) fail("target quantile outside [0, lambda]");
  const double level = at_qk + eta;
  auto breaks_k = knot_locations(fk);
  breaks_k.push_back(sk);
  breaks_k.push_back(qk);
  breaks_k.push_back(fk.lower_quantile(level));
  const auto gk = rebuild(
      std::move(breaks_k),
      [&](double x) {
        const double f = fk.cdf_left(x);
        if (x <= sk) return f;
        return x <= qk ? f + eta : std::max(f, level);
      },
      [&](double x) {
        const double f = fk.cdf(x);
        if (x < sk) return f;
        return x <= qk ? f + eta : std::max(f, level);
      });

  std::vector<RewardDistribution> arms(inst.arms().begin(), inst.arms().end());
  arms[a] = RewardDistribution::from_cdf(ga);
  arms[k] = RewardDistribution::from_cdf(gk);
  return Instance(std::move(arms), q, lam);
}

}  // namespace qbai::dist
