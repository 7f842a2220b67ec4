#include "kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "errors.hpp"

namespace scanmix {

namespace {

int band_width(const ModelParams& p) { return std::min(2 * p.k + 1, p.n + 1); }

// Restricted rows below n/2 are centred on the mirrored plus-count.
int band_start(const ModelParams& p, int m, int width) {
  int centre = m;
  if (p.mode == Mode::restricted && 2 * m < p.n) centre = p.n - m;
  return std::clamp(centre - p.k, 0, p.n + 1 - width);
}

void check_budget(const ModelParams& p, const KernelBudget& budget) {
  const std::int64_t k1 = p.k + 1;
  const std::int64_t work = static_cast<std::int64_t>(p.n) * k1 * k1 * k1;
  if (p.n > budget.max_n || work > budget.max_work) {
    throw BudgetError("kernel budget exceeded for n=" + std::to_string(p.n) +
                      ", k=" + std::to_string(p.k));
  }
}

MagKernel build_unfolded(const ModelParams& params, const KernelBudget& budget) {
  check_budget(params, budget);
  ModelParams p = params;
  p.mode = Mode::standard;
  const int n = p.n;
  const int k = p.k;
  const UpdateRule rule(p);
  MagKernel kernel(p, band_width(p));

  // cur[(m_cur - (m - k)) * (k + 1) + a]: probability of plus-count m_cur with
  // `a` of the i scanned vertices currently +.
  const auto stride = static_cast<std::size_t>(k + 1);
  std::vector<double> cur(static_cast<std::size_t>(2 * k + 1) * stride);
  std::vector<double> next(cur.size());
  for (int m = 0; m <= n; ++m) {
    const int base = m - k;
    auto at = [&](std::vector<double>& v, int mc, int a) -> double& {
      return v[static_cast<std::size_t>(mc - base) * stride + static_cast<std::size_t>(a)];
    };
    std::fill(cur.begin(), cur.end(), 0.0);
    at(cur, m, 0) = 1.0;
    for (int i = 0; i < k; ++i) {
      std::fill(next.begin(), next.end(), 0.0);
      const double avail = n - i;
      for (int mc = std::max(0, m - i); mc <= std::min(n, m + i); ++mc) {
        for (int a = 0; a <= i; ++a) {
          const double w = at(cur, mc, a);
          if (w == 0.0) continue;
          const int plus_avail = mc - a;
          const int minus_avail = n - mc - (i - a);
          if (plus_avail > 0) {
            const double sel = w * plus_avail / avail;
            const double q = rule.prob_plus(mc, 1);
            at(next, mc, a + 1) += sel * q;
            at(next, mc - 1, a) += sel * (1.0 - q);
          }
          if (minus_avail > 0) {
            const double sel = w * minus_avail / avail;
            const double q = rule.prob_plus(mc, -1);
            at(next, mc + 1, a + 1) += sel * q;
            at(next, mc, a) += sel * (1.0 - q);
          }
        }
      }
      std::swap(cur, next);
    }
    const int start = band_start(p, m, kernel.width());
    kernel.set_row_start(m, start);
    auto row = kernel.row_band_mut(m);
    for (int mc = std::max(0, m - k); mc <= std::min(n, m + k); ++mc) {
      double s = 0.0;
      for (int a = 0; a <= k; ++a) s += at(cur, mc, a);
      row[static_cast<std::size_t>(mc - start)] = s;
    }
  }
  return kernel;
}

std::vector<double> log_gibbs_weights(const ModelParams& p) {
  std::vector<double> lw(static_cast<std::size_t>(p.n + 1));
  const double lgn = std::lgamma(p.n + 1.0);
  for (int m = 0; m <= p.n; ++m) {
    const double d = 2.0 * m - p.n;
    lw[static_cast<std::size_t>(m)] = lgn - std::lgamma(m + 1.0) - std::lgamma(p.n - m + 1.0) +
                                      p.beta * d * d / (2.0 * p.n);
  }
  return lw;
}

}  // namespace

double Distribution::total() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

Distribution Distribution::point_mass(std::size_t size, std::size_t at) {
  Distribution d;
  d.weights.assign(size, 0.0);
  d.weights.at(at) = 1.0;
  return d;
}

MagKernel::MagKernel(const ModelParams& params, int width)
    : params_(params),
      width_(width),
      start_(static_cast<std::size_t>(params.n + 1), 0),
      data_(static_cast<std::size_t>(params.n + 1) * static_cast<std::size_t>(width), 0.0) {}

std::span<const double> MagKernel::row_band(int m) const {
  return {data_.data() + static_cast<std::size_t>(m) * static_cast<std::size_t>(width_),
          static_cast<std::size_t>(width_)};
}

std::span<double> MagKernel::row_band_mut(int m) {
  return {data_.data() + static_cast<std::size_t>(m) * static_cast<std::size_t>(width_),
          static_cast<std::size_t>(width_)};
}

double MagKernel::entry(int m, int m_next) const {
  const int j = m_next - row_start(m);
  if (j < 0 || j >= width_) return 0.0;
  return row_band(m)[static_cast<std::size_t>(j)];
}

double MagKernel::row_sum(int m) const {
  double s = 0.0;
  for (double x : row_band(m)) s += x;
  return s;
}

std::vector<double> MagKernel::dense_row(int m) const {
  std::vector<double> row(static_cast<std::size_t>(states()), 0.0);
  const auto band = row_band(m);
  for (int j = 0; j < width_; ++j) {
    row[static_cast<std::size_t>(row_start(m) + j)] = band[static_cast<std::size_t>(j)];
  }
  return row;
}

void MagKernel::step_into(std::span<const double> in, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (int m = 0; m < states(); ++m) {
    const double w = in[static_cast<std::size_t>(m)];
    if (w == 0.0) continue;
    const auto band = row_band(m);
    double* dst = out.data() + row_start(m);
    for (int j = 0; j < width_; ++j) dst[j] += w * band[static_cast<std::size_t>(j)];
  }
}

Distribution MagKernel::step(const Distribution& dist) const {
  if (dist.size() != static_cast<std::size_t>(states())) {
    throw ValidationError("distribution size does not match kernel");
  }
  Distribution out;
  out.weights.resize(dist.size());
  step_into(dist.weights, out.weights);
  return out;
}

MagKernel build_mag_kernel(const ModelParams& params, const KernelBudget& budget) {
  if (params.mode != Mode::standard) {
    throw ValidationError("build_mag_kernel expects standard mode");
  }
  return build_unfolded(params, budget);
}

MagKernel build_restricted_mag_kernel(const ModelParams& params, const KernelBudget& budget) {
  if (params.mode != Mode::restricted) {
    throw ValidationError("build_restricted_mag_kernel expects restricted mode");
  }
  const MagKernel standard = build_unfolded(params, budget);
  const int n = params.n;
  MagKernel folded(params, standard.width());
  for (int m = 0; m <= n; ++m) {
    const int start = band_start(params, m, folded.width());
    folded.set_row_start(m, start);
    auto row = folded.row_band_mut(m);
    const auto src = standard.row_band(m);
    for (int j = 0; j < standard.width(); ++j) {
      int target = standard.row_start(m) + j;
      if (2 * target < n) target = n - target;
      const int col = target - start;
      const double w = src[static_cast<std::size_t>(j)];
      if (w == 0.0) continue;
      if (col < 0 || col >= folded.width()) {
        throw std::logic_error("folded entry outside band");
      }
      row[static_cast<std::size_t>(col)] += w;
    }
  }
  return folded;
}

MagKernel build_kernel(const ModelParams& params, const KernelBudget& budget) {
  return params.mode == Mode::standard ? build_mag_kernel(params, budget)
                                       : build_restricted_mag_kernel(params, budget);
}

Distribution fold(const Distribution& dist) {
  const int n = static_cast<int>(dist.size()) - 1;
  Distribution out;
  out.weights.assign(dist.size(), 0.0);
  for (int m = 0; m <= n; ++m) {
    const int target = 2 * m < n ? n - m : m;
    out.weights[static_cast<std::size_t>(target)] += dist.weights[static_cast<std::size_t>(m)];
  }
  return out;
}

Distribution stationary_magnetization(const ModelParams& params) {
  const auto lw = log_gibbs_weights(params);
  const double mx = *std::max_element(lw.begin(), lw.end());
  Distribution d;
  d.weights.resize(lw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < lw.size(); ++i) {
    d.weights[i] = std::exp(lw[i] - mx);
    total += d.weights[i];
  }
  for (auto& w : d.weights) w /= total;
  return params.mode == Mode::restricted ? fold(d) : d;
}

Distribution FullKernel::step(const Distribution& dist) const {
  const std::size_t s = states();
  if (dist.size() != s) throw ValidationError("distribution size does not match kernel");
  Distribution out;
  out.weights.assign(s, 0.0);
  for (std::size_t i = 0; i < s; ++i) {
    const double w = dist.weights[i];
    if (w == 0.0) continue;
    const double* row = matrix.data() + i * s;
    for (std::size_t j = 0; j < s; ++j) out.weights[j] += w * row[j];
  }
  return out;
}

FullKernel full_config_kernel(const ModelParams& params, const KernelBudget& budget) {
  const int n = params.n;
  const int k = params.k;
  if (n > 10) throw BudgetError("full configuration kernel limited to n <= 10");
  // Reachable (scanned set, configuration) pairs per start: C(n,j) 2^j at depth j.
  double work = 0.0;
  double choose = 1.0;
  for (int j = 0; j < k; ++j) {
    work += choose * std::ldexp(1.0, j) * (n - j) * 2.0;
    choose = choose * (n - j) / (j + 1);
  }
  work *= std::ldexp(1.0, n);
  if (work > static_cast<double>(budget.max_full_work)) {
    throw BudgetError("full configuration kernel budget exceeded");
  }
  ModelParams p = params;
  p.mode = Mode::standard;
  const UpdateRule rule(p);
  FullKernel fk;
  fk.n = n;
  const std::size_t s = fk.states();
  fk.matrix.assign(s * s, 0.0);

  using Layer = std::unordered_map<std::uint64_t, double>;
  for (std::uint32_t start = 0; start < s; ++start) {
    Layer cur{{static_cast<std::uint64_t>(start), 1.0}};
    for (int j = 0; j < k; ++j) {
      Layer next;
      next.reserve(cur.size() * 4);
      const double avail = n - j;
      for (const auto& [key, w] : cur) {
        const auto cfg = static_cast<std::uint32_t>(key & ((1ULL << n) - 1));
        const auto used = static_cast<std::uint32_t>(key >> n);
        const int m = std::popcount(cfg);
        for (int v = 0; v < n; ++v) {
          const std::uint32_t bit = 1U << v;
          if (used & bit) continue;
          const int spin = (cfg & bit) ? 1 : -1;
          const double q = rule.prob_plus(m, spin);
          const std::uint64_t used_key = static_cast<std::uint64_t>(used | bit) << n;
          next[used_key | (cfg | bit)] += w / avail * q;
          next[used_key | (cfg & ~bit)] += w / avail * (1.0 - q);
        }
      }
      cur = std::move(next);
    }
    double* row = fk.matrix.data() + start * s;
    for (const auto& [key, w] : cur) row[key & ((1ULL << n) - 1)] += w;
  }
  return fk;
}

FullKernel single_site_kernel(const ModelParams& params) {
  const int n = params.n;
  if (n > 10) throw BudgetError("full configuration kernel limited to n <= 10");
  ModelParams p = params;
  p.mode = Mode::standard;
  const UpdateRule rule(p);
  FullKernel fk;
  fk.n = n;
  const std::size_t s = fk.states();
  fk.matrix.assign(s * s, 0.0);
  for (std::uint32_t cfg = 0; cfg < s; ++cfg) {
    const int m = std::popcount(cfg);
    double* row = fk.matrix.data() + cfg * s;
    for (int v = 0; v < n; ++v) {
      const std::uint32_t bit = 1U << v;
      const double q = rule.prob_plus(m, (cfg & bit) ? 1 : -1);
      row[cfg | bit] += q / n;
      row[cfg & ~bit] += (1.0 - q) / n;
    }
  }
  return fk;
}

Distribution gibbs_full(const ModelParams& params) {
  const int n = params.n;
  const std::size_t s = std::size_t{1} << n;
  Distribution d;
  d.weights.resize(s);
  const double top = params.beta * n / 2.0;
  double total = 0.0;
  for (std::uint32_t cfg = 0; cfg < s; ++cfg) {
    const double diff = 2.0 * std::popcount(cfg) - n;
    d.weights[cfg] = std::exp(params.beta * diff * diff / (2.0 * n) - top);
    total += d.weights[cfg];
  }
  for (auto& w : d.weights) w /= total;
  return d;
}

double detailed_balance_residual(const FullKernel& kernel, const Distribution& pi) {
  const std::size_t s = kernel.states();
  double worst = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = i + 1; j < s; ++j) {
      const double lhs = pi.weights[i] * kernel.matrix[i * s + j];
      const double rhs = pi.weights[j] * kernel.matrix[j * s + i];
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

std::vector<double> project_to_plus_counts(const FullKernel& kernel, double* lumpability_defect) {
  const int n = kernel.n;
  const std::size_t s = kernel.states();
  const auto dim = static_cast<std::size_t>(n + 1);
  std::vector<double> lumped(dim * dim, 0.0);
  std::vector<double> count(dim, 0.0);
  std::vector<double> first(dim * dim, -1.0);
  double defect = 0.0;
  std::vector<double> row(dim);
  for (std::uint32_t cfg = 0; cfg < s; ++cfg) {
    std::fill(row.begin(), row.end(), 0.0);
    for (std::uint32_t to = 0; to < s; ++to) {
      row[static_cast<std::size_t>(std::popcount(to))] += kernel.matrix[cfg * s + to];
    }
    const auto m = static_cast<std::size_t>(std::popcount(cfg));
    for (std::size_t j = 0; j < dim; ++j) {
      if (count[m] == 0.0) {
        first[m * dim + j] = row[j];
      } else {
        defect = std::max(defect, std::abs(first[m * dim + j] - row[j]));
      }
      lumped[m * dim + j] += row[j];
    }
    count[m] += 1.0;
  }
  for (std::size_t m = 0; m < dim; ++m) {
    for (std::size_t j = 0; j < dim; ++j) lumped[m * dim + j] /= count[m];
  }
  if (lumpability_defect) *lumpability_defect = defect;
  return lumped;
}

Distribution evolve(const Distribution& dist, const MagKernel& kernel, std::int64_t t) {
  if (dist.size() != static_cast<std::size_t>(kernel.states())) {
    throw ValidationError("distribution size does not match kernel");
  }
  if (t < 0) throw ValidationError("negative step count");
  Distribution cur = dist;
  std::vector<double> buf(dist.size());
  for (std::int64_t i = 0; i < t; ++i) {
    kernel.step_into(cur.weights, buf);
    std::swap(cur.weights, buf);
  }
  return cur;
}

Distribution evolve(const Distribution& dist, const FullKernel& kernel, std::int64_t t) {
  if (t < 0) throw ValidationError("negative step count");
  Distribution cur = dist;
  for (std::int64_t i = 0; i < t; ++i) cur = kernel.step(cur);
  return cur;
}

namespace {

double tv_span(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace

double tv_distance(const Distribution& a, const Distribution& b) {
  if (a.size() != b.size()) throw ValidationError("distributions have different index sets");
  return tv_span(a.weights, b.weights);
}

std::vector<ProfilePoint> exact_d_profile(const MagKernel& kernel, int m0,
                                          std::span<const std::int64_t> times) {
  if (m0 < 0 || m0 > kernel.n()) throw ValidationError("start plus-count out of range");
  if (!std::is_sorted(times.begin(), times.end()) ||
      (!times.empty() && times.front() < 0)) {
    throw ValidationError("time grid must be sorted and non-negative");
  }
  const Distribution mu = stationary_magnetization(kernel.params());
  std::vector<double> cur(static_cast<std::size_t>(kernel.states()), 0.0);
  std::vector<double> buf(cur.size());
  cur[static_cast<std::size_t>(m0)] = 1.0;
  std::vector<ProfilePoint> out;
  out.reserve(times.size());
  std::int64_t t = 0;
  for (std::int64_t target : times) {
    for (; t < target; ++t) {
      kernel.step_into(cur, buf);
      std::swap(cur, buf);
    }
    out.push_back({target, tv_span(cur, mu.weights)});
  }
  return out;
}

std::vector<ProfilePoint> exact_d_series(const MagKernel& kernel, std::span<const int> starts,
                                         std::int64_t t_max, double stop_below) {
  const Distribution mu = stationary_magnetization(kernel.params());
  const auto dim = static_cast<std::size_t>(kernel.states());
  std::vector<std::vector<double>> cur;
  for (int m0 : starts) {
    if (m0 < 0 || m0 > kernel.n()) throw ValidationError("start plus-count out of range");
    cur.emplace_back(dim, 0.0)[static_cast<std::size_t>(m0)] = 1.0;
  }
  std::vector<double> buf(dim);
  std::vector<ProfilePoint> out;
  for (std::int64_t t = 0;; ++t) {
    double d = 0.0;
    for (const auto& c : cur) d = std::max(d, tv_span(c, mu.weights));
    out.push_back({t, d});
    if (t >= t_max || d <= stop_below) break;
    for (auto& c : cur) {
      kernel.step_into(c, buf);
      std::swap(c, buf);
    }
  }
  return out;
}

std::vector<int> extremal_starts(const MagKernel& kernel) {
  if (kernel.mode() == Mode::restricted) return {(kernel.n() + 1) / 2, kernel.n()};
  return {kernel.n()};
}

std::int64_t mixing_time_from_profile(std::span<const ProfilePoint> profile, double eps) {
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i].d <= eps) {
      if (i == 0 && profile[i].t > 0) {
        throw ValidationError("profile does not bracket the eps crossing");
      }
      return profile[i].t;
    }
  }
  throw ValidationError("profile never reaches eps");
}

std::int64_t exact_mixing_time(const MagKernel& kernel, double eps, std::int64_t t_max) {
  const auto starts = extremal_starts(kernel);
  const auto series = exact_d_series(kernel, starts, t_max, eps);
  if (series.back().d > eps) {
    throw BudgetError("mixing time exceeds t_max=" + std::to_string(t_max));
  }
  return series.back().t;
}

std::vector<ProfilePoint> full_d_profile(const FullKernel& kernel, const Distribution& pi,
                                         std::uint32_t start,
                                         std::span<const std::int64_t> times) {
  Distribution cur = Distribution::point_mass(kernel.states(), start);
  std::vector<ProfilePoint> out;
  std::int64_t t = 0;
  for (std::int64_t target : times) {
    for (; t < target; ++t) cur = kernel.step(cur);
    out.push_back({target, tv_distance(cur, pi)});
  }
  return out;
}

Moments magnetization_moments(const Distribution& dist) {
  const int n = static_cast<int>(dist.size()) - 1;
  double mean = 0.0;
  for (int m = 0; m <= n; ++m) mean += dist.weights[static_cast<std::size_t>(m)] * magnetization_of(m, n);
  double var = 0.0;
  for (int m = 0; m <= n; ++m) {
    const double d = magnetization_of(m, n) - mean;
    var += dist.weights[static_cast<std::size_t>(m)] * d * d;
  }
  return {mean, var};
}

Moments one_step_moments(const MagKernel& kernel, int m) {
  if (m < 0 || m > kernel.n()) throw ValidationError("plus-count out of range");
  Distribution row;
  row.weights = kernel.dense_row(m);
  return magnetization_moments(row);
}

void export_kernel(const MagKernel& kernel, std::ostream& out) {
  char buf[64];
  out << "# scanmix magnetization kernel\n";
  out << "n " << kernel.n() << "\n";
  out << "k " << kernel.k() << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", kernel.beta());
  out << "beta " << buf << "\n";
  out << "mode " << to_string(kernel.mode()) << "\n";
  for (int m = 0; m < kernel.states(); ++m) {
    const auto band = kernel.row_band(m);
    for (int j = 0; j < kernel.width(); ++j) {
      const double w = band[static_cast<std::size_t>(j)];
      if (w == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%.17g", w);
      out << m << ' ' << kernel.row_start(m) + j << ' ' << buf << '\n';
    }
  }
}

MagKernel import_kernel(std::istream& in) {
  std::string line;
  int n = -1;
  int k = -1;
  double beta = -1.0;
  std::string mode_text;
  auto fail = [](const std::string& what) -> void { throw ValidationError("kernel file: " + what); };
  while (mode_text.empty() && std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "n") ls >> n;
    else if (key == "k") ls >> k;
    else if (key == "beta") ls >> beta;
    else if (key == "mode") ls >> mode_text;
    else fail("unexpected header key '" + key + "'");
    if (ls.fail()) fail("malformed header line '" + line + "'");
  }
  if (mode_text.empty()) fail("missing header");
  const ModelParams p = make_params(n, k, beta, parse_mode(mode_text));
  MagKernel kernel(p, band_width(p));
  for (int m = 0; m <= n; ++m) kernel.set_row_start(m, band_start(p, m, kernel.width()));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int m = 0;
    int m_next = 0;
    double w = 0.0;
    ls >> m >> m_next >> w;
    if (ls.fail() || m < 0 || m > n) fail("malformed entry '" + line + "'");
    const int j = m_next - kernel.row_start(m);
    if (j < 0 || j >= kernel.width()) fail("entry outside band '" + line + "'");
    kernel.row_band_mut(m)[static_cast<std::size_t>(j)] = w;
  }
  return kernel;
}

void export_kernel_file(const MagKernel& kernel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  export_kernel(kernel, out);
}

MagKernel import_kernel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return import_kernel(in);
}

}  // namespace scanmix
