#include "grushin/paths.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace grushin {

namespace {

bool is_pinned(const TimeGrid& grid, std::size_t dim, std::span<const double> values) {
  const std::size_t last = grid.intervals() * dim;
  for (std::size_t k = 0; k < dim; ++k) {
    if (values[k] != 0.0 || values[last + k] != 0.0) return false;
  }
  return true;
}

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

// |z|^p from |z|^2.
double power_from_square(double sq, double p) {
  if (p == 2.0) return sq;
  if (p == 12.0) {
    const double c = sq * sq * sq;
    return c * c;
  }
  return std::pow(sq, 0.5 * p);
}

constexpr std::array<double, 4> kGaussNodes{-0.8611363115940526, -0.3399810435848563,
                                            0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kGaussWeights{0.3478548451374538, 0.6521451548625461,
                                              0.6521451548625461, 0.3478548451374538};

}  // namespace

TimeGrid make_uniform_grid(double horizon, std::int64_t n) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("make_uniform_grid: horizon T must be positive, got " +
                                std::to_string(horizon));
  }
  if (n < 1) {
    throw std::invalid_argument("make_uniform_grid: n must be >= 1, got " + std::to_string(n));
  }
  TimeGrid grid;
  grid.horizon = horizon;
  grid.times.resize(static_cast<std::size_t>(n) + 1);
  const double dt = horizon / static_cast<double>(n);
  for (std::int64_t i = 0; i < n; ++i) grid.times[static_cast<std::size_t>(i)] = dt * static_cast<double>(i);
  grid.times.back() = horizon;
  return grid;
}

TimeGrid make_grid(std::vector<double> times) {
  if (times.size() < 2 || times.front() != 0.0) {
    throw std::invalid_argument("make_grid: need at least two nodes starting at 0");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw std::invalid_argument("make_grid: nodes must increase strictly");
    }
  }
  TimeGrid grid;
  grid.horizon = times.back();
  grid.times = std::move(times);
  return grid;
}

const char* to_string(PathKind kind) {
  switch (kind) {
    case PathKind::bridge_sample: return "bridge-sample";
    case PathKind::linear: return "linear";
    case PathKind::cameron_martin: return "cameron-martin";
  }
  return "unknown";
}

DiscretePath::DiscretePath() : DiscretePath(make_uniform_grid(1.0, 1), 1, PathKind::cameron_martin) {}

DiscretePath::DiscretePath(TimeGrid grid, std::size_t dim, PathKind kind)
    : grid_(std::move(grid)), dim_(dim), values_(grid_.nodes() * dim, 0.0), kind_(kind) {
  if (dim_ == 0) throw std::invalid_argument("DiscretePath: dimension must be >= 1");
}

DiscretePath::DiscretePath(TimeGrid grid, std::size_t dim, std::vector<double> values,
                           PathKind kind)
    : grid_(std::move(grid)), dim_(dim), values_(std::move(values)), kind_(kind) {
  if (dim_ == 0) throw std::invalid_argument("DiscretePath: dimension must be >= 1");
  if (values_.size() != grid_.nodes() * dim_) {
    throw std::invalid_argument("DiscretePath: expected " + std::to_string(grid_.nodes() * dim_) +
                                " values, got " + std::to_string(values_.size()));
  }
  if (kind_ != PathKind::linear && !is_pinned(grid_, dim_, values_)) {
    throw std::invalid_argument(std::string("DiscretePath: ") + to_string(kind_) +
                                " path must vanish at both endpoints");
  }
}

DiscretePath DiscretePath::scaled(double c) const {
  DiscretePath out = *this;
  for (double& v : out.values_) v *= c;
  return out;
}

void fill_bridge(const TimeGrid& grid, std::size_t dim, Engine& engine,
                 std::normal_distribution<double>& normal, std::span<double> out) {
  const std::size_t n = grid.intervals();
  for (std::size_t k = 0; k < dim; ++k) out[k] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sd = std::sqrt(grid.step(i));
    for (std::size_t k = 0; k < dim; ++k) {
      out[(i + 1) * dim + k] = out[i * dim + k] + sd * normal(engine);
    }
  }
  // Pinning transform w(t) - (t/T) w(T); exact in law at the nodes.
  const double inv_t = 1.0 / grid.horizon;
  for (std::size_t k = 0; k < dim; ++k) {
    const double end = out[n * dim + k];
    for (std::size_t i = 1; i < n; ++i) out[i * dim + k] -= grid.times[i] * inv_t * end;
    out[n * dim + k] = 0.0;
  }
}

DiscretePath sample_bridge(const TimeGrid& grid, std::size_t dim, const RngStream& rng) {
  DiscretePath path(grid, dim, PathKind::bridge_sample);
  Engine engine = make_engine(rng);
  std::normal_distribution<double> normal;
  fill_bridge(grid, dim, engine, normal, path.values());
  return path;
}

DiscretePath linear_path(double horizon, std::span<const double> x, std::span<const double> xi,
                         const TimeGrid& grid) {
  if (grid.horizon != horizon) {
    throw std::invalid_argument("linear_path: grid horizon does not match T");
  }
  if (x.size() != xi.size() || x.empty()) {
    throw std::invalid_argument("linear_path: x and xi must have the same nonzero dimension");
  }
  const std::size_t dim = x.size();
  std::vector<double> values(grid.nodes() * dim);
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    const double s = grid.times[i] / horizon;
    for (std::size_t k = 0; k < dim; ++k) values[i * dim + k] = x[k] + s * (xi[k] - x[k]);
  }
  for (std::size_t k = 0; k < dim; ++k) values[grid.intervals() * dim + k] = xi[k];
  return DiscretePath(grid, dim, std::move(values), PathKind::linear);
}

double besov_norm(const TimeGrid& grid, std::size_t dim, std::span<const double> values, double p,
                  double theta) {
  if (!(p > 1.0) || !(theta > 0.0 && theta < 0.5)) {
    throw std::invalid_argument("besov_norm: need p > 1 and theta in (0, 1/2)");
  }
  if (!(p * theta > 1.0)) {
    throw std::invalid_argument("besov_norm: need p * theta > 1, got " + std::to_string(p * theta));
  }
  const std::size_t n = grid.intervals();
  const double expo = 1.0 + p * theta;
  const double q = p * (1.0 - theta);
  const double diag_factor = 2.0 / (q * (q + 1.0));

  std::vector<double> mid(n * dim);
  std::vector<double> slope(n * dim);
  std::vector<double> tmid(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = grid.step(i);
    tmid[i] = 0.5 * (grid.times[i] + grid.times[i + 1]);
    for (std::size_t k = 0; k < dim; ++k) {
      const double a = values[i * dim + k], b = values[(i + 1) * dim + k];
      mid[i * dim + k] = 0.5 * (a + b);
      slope[i * dim + k] = (b - a) / h;
    }
  }

  double diag = 0.0;      // cells u, v in the same segment: closed form
  double off = 0.0;       // i < j, counted twice
  std::vector<double> pu(dim), pv(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = grid.step(i);
    double s2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s2 += slope[i * dim + k] * slope[i * dim + k];
    diag += power_from_square(s2, p) * std::pow(hi, q + 1.0) * diag_factor;

    if (i + 1 < n) {
      // Adjacent cells touch the diagonal at a corner; tensor Gauss-Legendre.
      const std::size_t j = i + 1;
      const double hj = grid.step(j);
      double cell = 0.0;
      for (std::size_t a = 0; a < 4; ++a) {
        const double su = 0.5 * (1.0 + kGaussNodes[a]);
        const double u = grid.times[i] + su * hi;
        for (std::size_t k = 0; k < dim; ++k)
          pu[k] = values[i * dim + k] + su * hi * slope[i * dim + k];
        for (std::size_t b = 0; b < 4; ++b) {
          const double sv = 0.5 * (1.0 + kGaussNodes[b]);
          const double v = grid.times[j] + sv * hj;
          for (std::size_t k = 0; k < dim; ++k)
            pv[k] = values[j * dim + k] + sv * hj * slope[j * dim + k];
          const double num = power_from_square(squared_distance(pu.data(), pv.data(), dim), p);
          cell += kGaussWeights[a] * kGaussWeights[b] * num / std::pow(v - u, expo);
        }
      }
      off += cell * 0.25 * hi * hj;
    }
    for (std::size_t j = i + 2; j < n; ++j) {
      const double num =
          power_from_square(squared_distance(&mid[i * dim], &mid[j * dim], dim), p);
      if (num == 0.0) continue;
      off += num / std::pow(tmid[j] - tmid[i], expo) * hi * grid.step(j);
    }
  }
  return std::pow(diag + 2.0 * off, 1.0 / p);
}

double besov_norm(const DiscretePath& path, double p, double theta) {
  return besov_norm(path.grid(), path.dim(), path.values(), p, theta);
}

double cm_inner(const TimeGrid& grid, std::size_t dim, std::span<const double> h,
                std::span<const double> g) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid.intervals(); ++i) {
    double dot = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      dot += (h[(i + 1) * dim + k] - h[i * dim + k]) * (g[(i + 1) * dim + k] - g[i * dim + k]);
    }
    s += dot / grid.step(i);
  }
  return s;
}

double cm_norm(const DiscretePath& h) {
  if (!is_pinned(h.grid(), h.dim(), h.values())) {
    throw std::invalid_argument("cm_norm: Cameron-Martin path must vanish at both endpoints");
  }
  return std::sqrt(cm_inner(h.grid(), h.dim(), h.values(), h.values()));
}

double sup_norm(const DiscretePath& path) {
  double best = 0.0;
  const std::vector<double> zero(path.dim(), 0.0);
  for (std::size_t i = 0; i < path.nodes(); ++i) {
    best = std::max(best, squared_distance(path.node(i).data(), zero.data(), path.dim()));
  }
  return std::sqrt(best);
}

DiscretePath resample(const DiscretePath& path, const TimeGrid& grid) {
  if (grid.horizon != path.grid().horizon) {
    throw std::invalid_argument("resample: horizons differ");
  }
  const auto& src = path.grid().times;
  const std::size_t dim = path.dim();
  std::vector<double> values(grid.nodes() * dim);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    const double t = grid.times[i];
    while (seg + 2 < src.size() && src[seg + 1] < t) ++seg;
    const double w = std::clamp((t - src[seg]) / (src[seg + 1] - src[seg]), 0.0, 1.0);
    for (std::size_t k = 0; k < dim; ++k) {
      values[i * dim + k] = (1.0 - w) * path(seg, k) + w * path(seg + 1, k);
    }
  }
  if (path.kind() != PathKind::linear) {
    for (std::size_t k = 0; k < dim; ++k) {
      values[k] = 0.0;
      values[grid.intervals() * dim + k] = 0.0;
    }
  }
  return DiscretePath(grid, dim, std::move(values), path.kind());
}

}  // namespace grushin
