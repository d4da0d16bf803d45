#include "qgraph/orbits.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_map>

namespace qgraph {

namespace {

using cd = std::complex<double>;

constexpr std::uint64_t kDenseLimit = std::uint64_t{1} << 21;

/// Sparse accumulator keyed by (bond, multiplicity code). Dense storage
/// with an active list when the key space is small.
class StateVector {
 public:
  explicit StateVector(std::uint64_t key_space) {
    if (key_space <= kDenseLimit) {
      dense_ = true;
      values_.assign(key_space, cd{});
      seen_.assign(key_space, 0);
    }
  }

  void add(std::uint64_t key, cd v) {
    if (dense_) {
      if (!seen_[key]) {
        seen_[key] = 1;
        active_.push_back(key);
      }
      values_[key] += v;
    } else {
      sparse_[key] += v;
    }
  }

  template <typename F>
  void for_each(F&& f) const {
    if (dense_) {
      for (std::uint64_t key : active_) f(key, values_[key]);
    } else {
      for (const auto& [key, v] : sparse_) f(key, v);
    }
  }

  void clear() {
    if (dense_) {
      for (std::uint64_t key : active_) {
        values_[key] = cd{};
        seen_[key] = 0;
      }
      active_.clear();
    } else {
      sparse_.clear();
    }
  }

  bool empty() const { return dense_ ? active_.empty() : sparse_.empty(); }

 private:
  bool dense_ = false;
  std::vector<cd> values_;
  std::vector<char> seen_;
  std::vector<std::uint64_t> active_;
  std::unordered_map<std::uint64_t, cd> sparse_;
};

struct Codec {
  std::uint64_t dim;
  std::uint64_t radix;
  int classes;

  std::uint64_t key(int bond, std::uint64_t code) const { return bond + dim * code; }
  int bond(std::uint64_t key) const { return static_cast<int>(key % dim); }
  std::uint64_t code(std::uint64_t key) const { return key / dim; }
  std::uint64_t step(int cls) const {
    std::uint64_t inc = 1;
    if (cls == classes - 1) return 0;
    for (int c = 0; c < cls; ++c) inc *= radix;
    return inc;
  }
  std::uint64_t space() const {
    std::uint64_t s = dim;
    for (int c = 0; c + 1 < classes; ++c) s *= radix;
    return s;
  }
  /// Metric length of a multiplicity code whose counts total `count`.
  double length(std::uint64_t code, int count, std::span<const double> values) const {
    CompensatedSum<double> sum;
    long used = 0;
    for (int c = 0; c + 1 < classes; ++c) {
      const long m = static_cast<long>(code % radix);
      code /= radix;
      used += m;
      sum += static_cast<double>(m) * values[c];
    }
    sum += static_cast<double>(count - used) * values[classes - 1];
    return sum.value();
  }
};

}  // namespace

PathEnumeration enumerate_periodic_paths(const Eigen::MatrixXcd& s,
                                         std::span<const double> lengths, int n,
                                         std::size_t budget) {
  if (n < 1) throw Error("enumerate_periodic_paths: n must be >= 1");
  const int dim = static_cast<int>(s.rows());
  if (static_cast<int>(lengths.size()) != dim) {
    throw Error("enumerate_periodic_paths: need one length per directed bond");
  }
  std::vector<std::vector<int>> succ(dim);
  for (int b = 0; b < dim; ++b) {
    for (int a = 0; a < dim; ++a) {
      if (s(a, b) != cd{}) succ[b].push_back(a);
    }
  }

  PathEnumeration out;
  CompensatedSum<cd> sigma;
  std::vector<int> path(n);
  // Depth-first: extend path[0..depth) and close back to path[0].
  auto dfs = [&](auto&& self, int depth, cd amp, double len) -> void {
    const int last = path[depth - 1];
    if (depth == n) {
      const cd close = s(path[0], last);
      if (close == cd{}) return;
      if (out.paths.size() >= budget) {
        throw BudgetExceeded("enumerate_periodic_paths: more than " +
                             std::to_string(budget) + " paths at period " +
                             std::to_string(n));
      }
      const cd a = amp * close;
      out.paths.push_back({path, a, len});
      sigma += a / (len * n);
      return;
    }
    for (int next : succ[last]) {
      path[depth] = next;
      self(self, depth + 1, amp * s(next, last), len + lengths[next]);
    }
  };
  for (int start = 0; start < dim; ++start) {
    path[0] = start;
    dfs(dfs, 1, cd{1.0}, lengths[start]);
  }
  out.sigma = sigma.value();
  return out;
}

PathSums::PathSums(const Eigen::MatrixXcd& s, std::span<const double> lengths)
    : dim_(static_cast<int>(s.rows())), succ_(s.rows()) {
  if (static_cast<int>(lengths.size()) != dim_) {
    throw Error("PathSums: need one length per directed bond");
  }
  for (int b = 0; b < dim_; ++b) {
    for (int a = 0; a < dim_; ++a) {
      if (s(a, b) != cd{}) succ_[b].push_back({a, s(a, b)});
    }
  }
  values_.assign(lengths.begin(), lengths.end());
  std::sort(values_.begin(), values_.end());
  values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
  for (double l : lengths) {
    class_of_.push_back(static_cast<int>(
        std::lower_bound(values_.begin(), values_.end(), l) - values_.begin()));
  }
}

std::uint64_t PathSums::radix_for(int levels) const {
  const std::uint64_t radix = static_cast<std::uint64_t>(levels) + 2;
  long double space = dim_;
  for (std::size_t c = 0; c + 1 < values_.size(); ++c) space *= radix;
  if (space > static_cast<long double>(std::numeric_limits<std::uint64_t>::max() / 4)) {
    throw Error("PathSums: too many distinct lengths for this depth");
  }
  return radix;
}

std::vector<std::vector<LengthGroup>> PathSums::periodic(int n_max) const {
  if (n_max < 1) return {};
  const Codec codec{static_cast<std::uint64_t>(dim_), radix_for(n_max),
                    distinct_lengths()};
  std::vector<std::map<std::uint64_t, CompensatedSum<cd>>> acc(n_max);
  StateVector cur(codec.space()), next(codec.space());
  for (int start = 0; start < dim_; ++start) {
    cur.clear();
    cur.add(codec.key(start, codec.step(class_of_[start])), cd{1.0});
    for (int level = 1; level <= n_max; ++level) {
      cur.for_each([&](std::uint64_t key, cd amp) {
        const int bond = codec.bond(key);
        for (const auto& sc : succ_[bond]) {
          if (sc.to == start) acc[level - 1][codec.code(key)] += sc.amp * amp;
        }
      });
      if (level == n_max) break;
      next.clear();
      cur.for_each([&](std::uint64_t key, cd amp) {
        const int bond = codec.bond(key);
        const std::uint64_t code = codec.code(key);
        for (const auto& sc : succ_[bond]) {
          next.add(codec.key(sc.to, code + codec.step(class_of_[sc.to])), sc.amp * amp);
        }
      });
      std::swap(cur, next);
    }
  }
  std::vector<std::vector<LengthGroup>> out(n_max);
  for (int n = 1; n <= n_max; ++n) {
    for (const auto& [code, sum] : acc[n - 1]) {
      out[n - 1].push_back({codec.length(code, n, values_), sum.value()});
    }
  }
  return out;
}

std::vector<cd> PathSums::sigmas(int n_max) const {
  const auto groups = periodic(n_max);
  std::vector<cd> out(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    CompensatedSum<cd> sum;
    for (const auto& g : groups[i]) sum += g.amplitude / (g.length * n);
    out[i] = sum.value();
  }
  return out;
}

std::vector<std::vector<BounceGroup>> PathSums::bounce(int m_max) const {
  if (m_max < 0) return {};
  const int steps = m_max + 1;
  const Codec codec{static_cast<std::uint64_t>(dim_), radix_for(steps),
                    distinct_lengths()};
  const int nb = dim_ / 2;
  // key: (closing class, full multiplicity code) per level
  std::vector<std::map<std::pair<int, std::uint64_t>, CompensatedSum<cd>>> acc(steps);
  StateVector cur(codec.space()), next(codec.space());
  for (int alpha = 0; alpha < dim_; ++alpha) {
    const int start = alpha < nb ? alpha + nb : alpha - nb;
    cur.clear();
    cur.add(codec.key(start, 0), cd{1.0});
    for (int step = 1; step <= steps; ++step) {
      next.clear();
      cur.for_each([&](std::uint64_t key, cd amp) {
        const int bond = codec.bond(key);
        const std::uint64_t code = codec.code(key);
        for (const auto& sc : succ_[bond]) {
          next.add(codec.key(sc.to, code + codec.step(class_of_[sc.to])), sc.amp * amp);
        }
      });
      std::swap(cur, next);
      cur.for_each([&](std::uint64_t key, cd amp) {
        if (codec.bond(key) == alpha) {
          acc[step - 1][{class_of_[alpha], codec.code(key)}] += amp;
        }
      });
    }
  }
  std::vector<std::vector<BounceGroup>> out(steps);
  for (int level = 0; level < steps; ++level) {
    for (const auto& [k, sum] : acc[level]) {
      const double closing = values_[k.first];
      const double full = codec.length(k.second, level + 1, values_);
      out[level].push_back({full - closing, closing, sum.value()});
    }
  }
  return out;
}

}  // namespace qgraph
