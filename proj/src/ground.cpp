#include "uarmpe/ground.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "uarmpe/errors.hpp"

namespace uarmpe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void for_each_ground_substitution(const Model& m, const Parfactor& g,
                                  const std::function<void(std::span<const ConstId>)>& visit) {
  if (g.constraint.contradictory()) return;
  const std::size_t n = g.vars.size();
  // Disequalities checked as soon as their later endpoint is bound.
  std::vector<std::vector<Disequality>> checks(n);
  for (const auto& d : g.constraint.pairs()) {
    const VarId last = d.rhs.is_var() ? std::max(d.lhs.id, d.rhs.id) : d.lhs.id;
    checks[last].push_back(d);
  }
  std::vector<ConstId> binding(n, 0);
  auto legal = [&](VarId v) {
    for (const auto& d : checks[v]) {
      const ConstId a = binding[d.lhs.id];
      const ConstId b = d.rhs.is_var() ? binding[d.rhs.id] : d.rhs.id;
      if (a == b) return false;
    }
    return true;
  };
  std::function<void(VarId)> rec = [&](VarId v) {
    if (v == n) {
      visit(binding);
      return;
    }
    const std::size_t size = m.domains[g.vars[v].domain].size;
    for (ConstId c = 0; c < size; ++c) {
      binding[v] = c;
      if (legal(v)) rec(v + 1);
    }
  };
  rec(0);
}

GroundAtom ground_atom(const Model& m, const Atom& a, std::span<const ConstId> binding) {
  GroundAtom out{m.predicates[a.predicate].name, {}};
  out.args.reserve(a.args.size());
  for (const auto& t : a.args) out.args.push_back(t.is_var() ? binding[t.id] : t.id);
  return out;
}

std::vector<GroundFactor> enumerate_groundings(const Model& m, const Parfactor& g) {
  std::vector<GroundFactor> out;
  for_each_ground_substitution(m, g, [&](std::span<const ConstId> binding) {
    GroundFactor f{{}, g.table};
    f.atoms.reserve(g.atoms.size());
    for (const auto& a : g.atoms) f.atoms.push_back(ground_atom(m, a, binding));
    out.push_back(std::move(f));
  });
  return out;
}

namespace {

// Ground factor network with random variables indexed in canonical order.
struct Network {
  struct Factor {
    std::vector<std::uint32_t> axis_vars;  // one rv per table axis; may repeat
    const PotentialTable* table = nullptr;
  };
  std::vector<GroundAtom> rvs;
  std::vector<std::uint32_t> ranges;
  std::vector<Factor> factors;

  double value(const Factor& f, std::span<const std::uint32_t> assignment) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < f.axis_vars.size(); ++i) idx = idx * f.table->axes[i] + assignment[f.axis_vars[i]];
    return f.table->log_weights[idx];
  }

  // Sum in canonical factor order.
  double total(std::span<const std::uint32_t> assignment) const {
    double sum = 0.0;
    for (const auto& f : factors) {
      const double w = value(f, assignment);
      if (w == kNegInf) return kNegInf;
      sum += w;
    }
    return sum;
  }

  Assignment to_assignment(std::span<const std::uint32_t> values) const {
    Assignment out;
    for (std::size_t i = 0; i < rvs.size(); ++i) out.emplace_hint(out.end(), rvs[i], values[i]);
    return out;
  }
};

Network build_network(const Model& m) {
  // Predicate rank by name gives the canonical order without string compares.
  std::vector<PredicateId> by_name(m.predicates.size());
  std::iota(by_name.begin(), by_name.end(), 0);
  std::sort(by_name.begin(), by_name.end(),
            [&](PredicateId a, PredicateId b) { return m.predicates[a].name < m.predicates[b].name; });
  std::vector<std::uint32_t> rank(m.predicates.size());
  for (std::uint32_t r = 0; r < by_name.size(); ++r) rank[by_name[r]] = r;

  using Key = std::pair<std::uint32_t, std::vector<ConstId>>;
  std::vector<Key> keys;
  std::vector<std::pair<const PotentialTable*, std::size_t>> factor_heads;  // table, first key index
  for (const auto& g : m.parfactors) {
    for_each_ground_substitution(m, g, [&](std::span<const ConstId> binding) {
      factor_heads.emplace_back(g.table.get(), keys.size());
      for (const auto& a : g.atoms) {
        Key k{rank[a.predicate], {}};
        k.second.reserve(a.args.size());
        for (const auto& t : a.args) k.second.push_back(t.is_var() ? binding[t.id] : t.id);
        keys.push_back(std::move(k));
      }
    });
  }
  std::vector<Key> unique = keys;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  Network net;
  net.rvs.reserve(unique.size());
  net.ranges.reserve(unique.size());
  for (const auto& k : unique) {
    const auto& p = m.predicates[by_name[k.first]];
    net.rvs.push_back(GroundAtom{p.name, k.second});
    net.ranges.push_back(p.range);
  }
  net.factors.reserve(factor_heads.size());
  for (std::size_t f = 0; f < factor_heads.size(); ++f) {
    const std::size_t begin = factor_heads[f].second;
    const std::size_t end = f + 1 < factor_heads.size() ? factor_heads[f + 1].second : keys.size();
    Network::Factor nf;
    nf.table = factor_heads[f].first;
    for (std::size_t i = begin; i < end; ++i)
      nf.axis_vars.push_back(
          static_cast<std::uint32_t>(std::lower_bound(unique.begin(), unique.end(), keys[i]) - unique.begin()));
    net.factors.push_back(std::move(nf));
  }
  return net;
}

}  // namespace

std::vector<GroundAtom> random_variables(const Model& m) { return build_network(m).rvs; }

double model_weight(const Model& m, const Assignment& v) {
  double sum = 0.0;
  bool zero = false;
  std::vector<std::uint32_t> values;
  for (const auto& g : m.parfactors) {
    GroundAtom key;
    for_each_ground_substitution(m, g, [&](std::span<const ConstId> binding) {
      values.clear();
      for (const auto& a : g.atoms) {
        key.predicate = m.predicates[a.predicate].name;
        key.args.clear();
        for (const auto& t : a.args) key.args.push_back(t.is_var() ? binding[t.id] : t.id);
        auto it = v.find(key);
        if (it == v.end()) throw std::out_of_range("assignment misses " + format_ground_atom(m, key));
        if (it->second >= m.predicates[a.predicate].range)
          throw std::out_of_range("assignment value out of range for " + format_ground_atom(m, key));
        values.push_back(it->second);
      }
      const double w = g.table->at(values);
      if (w == kNegInf) zero = true;
      sum += w;
    });
  }
  return zero ? kNegInf : sum;
}

// ---------------------------------------------------------------------------
// Brute force

namespace {

struct Candidate {
  std::vector<std::uint32_t> values;
  double weight = kNegInf;
  bool found = false;
};

bool better(double w, double best) {
  if (w == kNegInf) return false;
  if (best == kNegInf) return true;
  return w > best + 1e-12 * std::max(1.0, std::abs(best));
}

// Enumerates linear indices [begin, end) of the mixed-radix space where rv 0
// is the most significant digit, so enumeration order is lexicographic.
Candidate brute_force_range(const Network& net, const std::vector<std::vector<std::uint32_t>>& touching,
                            std::uint64_t begin, std::uint64_t end) {
  const std::size_t n = net.rvs.size();
  std::vector<std::uint32_t> digits(n, 0);
  std::uint64_t rest = begin;
  for (std::size_t i = n; i-- > 0;) {
    digits[i] = static_cast<std::uint32_t>(rest % net.ranges[i]);
    rest /= net.ranges[i];
  }
  Candidate best;
  best.values = digits;
  best.weight = net.total(digits);
  best.found = true;

  std::vector<double> cache(net.factors.size());
  double finite_sum = 0.0;
  std::size_t zeros = 0;
  auto resync = [&] {
    finite_sum = 0.0;
    zeros = 0;
    for (std::size_t f = 0; f < net.factors.size(); ++f) {
      cache[f] = net.value(net.factors[f], digits);
      if (cache[f] == kNegInf)
        ++zeros;
      else
        finite_sum += cache[f];
    }
  };
  resync();
  auto update = [&](std::size_t rv) {
    for (auto f : touching[rv]) {
      const double old = cache[f];
      const double now = net.value(net.factors[f], digits);
      if (old == kNegInf)
        --zeros;
      else
        finite_sum -= old;
      if (now == kNegInf)
        ++zeros;
      else
        finite_sum += now;
      cache[f] = now;
    }
  };

  for (std::uint64_t idx = begin + 1; idx < end; ++idx) {
    // odometer increment from the least significant digit
    for (std::size_t i = n; i-- > 0;) {
      if (++digits[i] < net.ranges[i]) {
        update(i);
        break;
      }
      digits[i] = 0;
      update(i);
    }
    if ((idx & 0xFFF) == 0) resync();
    if (zeros) continue;
    const double slack = 1e-7 * std::max(1.0, std::abs(finite_sum));
    if (best.weight != kNegInf && finite_sum < best.weight - slack) continue;
    const double exact = net.total(digits);
    if (better(exact, best.weight)) {
      best.weight = exact;
      best.values = digits;
    }
  }
  return best;
}

}  // namespace

namespace {

std::string describe_count(double x) {
  char buf[64];
  if (x < 1e15)
    std::snprintf(buf, sizeof buf, "%.0f", x);
  else
    std::snprintf(buf, sizeof buf, "2^%.1f", std::log2(x));
  return buf;
}

}  // namespace

MpeResult brute_force_mpe(const Model& m, const EngineOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  const Network net = build_network(m);
  double space = 1.0, log2_space = 0.0;
  for (auto r : net.ranges) {
    space *= r;
    log2_space += std::log2(static_cast<double>(r));
  }
  if (space > opts.enumeration_budget)
    throw BudgetExceeded("brute force needs " + (std::isfinite(space) ? describe_count(space) : "2^" + std::to_string(static_cast<long long>(std::ceil(log2_space)))) +
                             " assignments, budget is " + describe_count(opts.enumeration_budget),
                         space, opts.enumeration_budget);
  const auto total = static_cast<std::uint64_t>(space);

  std::vector<std::vector<std::uint32_t>> touching(net.rvs.size());
  for (std::uint32_t f = 0; f < net.factors.size(); ++f) {
    auto vars = net.factors[f].axis_vars;
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    for (auto v : vars) touching[v].push_back(f);
  }

  unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  if (total < (1u << 16)) workers = 1;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, total));
  std::vector<Candidate> partial(workers);
  if (workers == 1) {
    partial[0] = brute_force_range(net, touching, 0, total);
  } else {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (total + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t b = std::min(total, w * chunk);
      const std::uint64_t e = std::min(total, b + chunk);
      if (b >= e) continue;
      pool.emplace_back([&, w, b, e] { partial[w] = brute_force_range(net, touching, b, e); });
    }
  }
  // Chunks are in lexicographic order, so earlier wins ties.
  Candidate best;
  for (auto& c : partial) {
    if (!c.found) continue;
    if (!best.found || better(c.weight, best.weight)) best = std::move(c);
  }

  MpeResult result;
  result.assignment = net.to_assignment(best.values);
  result.log_weight = best.weight;
  result.engine = "brute";
  result.stats.random_variables = net.rvs.size();
  result.stats.ground_factors = net.factors.size();
  result.stats.elapsed_ms = elapsed_ms(start);
  return result;
}

// ---------------------------------------------------------------------------
// Max-product variable elimination

namespace {

struct DenseFactor {
  std::vector<std::uint32_t> scope;  // sorted rv ids
  std::vector<double> values;        // row-major over scope
};

double scope_size(const std::vector<std::uint32_t>& scope, const std::vector<std::uint32_t>& ranges) {
  double s = 1.0;
  for (auto v : scope) s *= ranges[v];
  return s;
}

std::vector<std::size_t> strides_for(const std::vector<std::uint32_t>& scope, const std::vector<std::uint32_t>& ranges) {
  std::vector<std::size_t> strides(scope.size(), 1);
  for (std::size_t i = scope.size(); i-- > 1;) strides[i - 1] = strides[i] * ranges[scope[i]];
  return strides;
}

// Converts a ground factor into a table over its distinct rvs, restricting
// repeated rvs to the diagonal.
DenseFactor densify(const Network& net, const Network::Factor& f) {
  DenseFactor out;
  out.scope = f.axis_vars;
  std::sort(out.scope.begin(), out.scope.end());
  out.scope.erase(std::unique(out.scope.begin(), out.scope.end()), out.scope.end());
  const auto size = static_cast<std::size_t>(scope_size(out.scope, net.ranges));
  out.values.resize(size);
  std::vector<std::uint32_t> digits(out.scope.size(), 0);
  std::vector<std::size_t> pos(f.axis_vars.size());
  for (std::size_t i = 0; i < f.axis_vars.size(); ++i)
    pos[i] = static_cast<std::size_t>(std::lower_bound(out.scope.begin(), out.scope.end(), f.axis_vars[i]) -
                                      out.scope.begin());
  for (std::size_t idx = 0; idx < size; ++idx) {
    std::size_t t = 0;
    for (std::size_t i = 0; i < f.axis_vars.size(); ++i) t = t * f.table->axes[i] + digits[pos[i]];
    out.values[idx] = f.table->log_weights[t];
    for (std::size_t i = digits.size(); i-- > 0;) {
      if (++digits[i] < net.ranges[out.scope[i]]) break;
      digits[i] = 0;
    }
  }
  return out;
}

// Min-degree elimination order on the primal graph; ties by smallest rv id.
// Returns the order and the largest table (variable plus neighbours) it implies.
// Stops early once a table above `limit` is implied.
std::pair<std::vector<std::uint32_t>, double> min_degree_order(const Network& net, double limit) {
  const std::size_t n = net.rvs.size();
  std::vector<std::set<std::uint32_t>> adj(n);
  for (const auto& f : net.factors) {
    std::vector<std::uint32_t> vars = f.axis_vars;
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    for (std::size_t i = 0; i < vars.size(); ++i)
      for (std::size_t j = i + 1; j < vars.size(); ++j) {
        adj[vars[i]].insert(vars[j]);
        adj[vars[j]].insert(vars[i]);
      }
  }
  std::set<std::pair<std::size_t, std::uint32_t>> queue;
  for (std::uint32_t v = 0; v < n; ++v) queue.emplace(adj[v].size(), v);
  std::vector<std::uint32_t> order;
  order.reserve(n);
  double widest = 1.0;
  while (!queue.empty()) {
    const auto [deg, v] = *queue.begin();
    queue.erase(queue.begin());
    order.push_back(v);
    double size = net.ranges[v];
    for (auto u : adj[v]) size *= net.ranges[u];
    widest = std::max(widest, size);
    if (widest > limit) break;
    std::vector<std::uint32_t> nb(adj[v].begin(), adj[v].end());
    for (auto u : nb) {
      queue.erase({adj[u].size(), u});
      adj[u].erase(v);
    }
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = i + 1; j < nb.size(); ++j) {
        adj[nb[i]].insert(nb[j]);
        adj[nb[j]].insert(nb[i]);
      }
    for (auto u : nb) queue.emplace(adj[u].size(), u);
    adj[v].clear();
  }
  return {std::move(order), widest};
}

}  // namespace

double estimate_ve_table_size(const Model& m, double stop_above) {
  return min_degree_order(build_network(m), stop_above).second;
}

MpeResult ve_max_product(const Model& m, const EngineOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  const Network net = build_network(m);
  const std::size_t n = net.rvs.size();
  auto [order, widest] = min_degree_order(net, opts.max_table_entries);
  if (widest > opts.max_table_entries)
    throw MemoryBudgetExceeded("variable elimination needs a table of at least " + describe_count(widest) +
                                   " entries, budget is " + describe_count(opts.max_table_entries),
                               widest, opts.max_table_entries);

  std::vector<DenseFactor> factors;
  factors.reserve(net.factors.size());
  std::vector<std::vector<std::size_t>> holding(n);
  std::vector<bool> alive;
  auto add_factor = [&](DenseFactor f) {
    const std::size_t id = factors.size();
    for (auto v : f.scope) holding[v].push_back(id);
    factors.push_back(std::move(f));
    alive.push_back(true);
  };
  for (const auto& f : net.factors) add_factor(densify(net, f));

  struct Choice {
    std::vector<std::uint32_t> scope;
    std::vector<std::uint32_t> best_value;
  };
  std::vector<Choice> choices(n);
  double constant = 0.0;

  for (auto v : order) {
    std::vector<std::size_t> involved;
    for (auto id : holding[v])
      if (alive[id]) involved.push_back(id);
    std::vector<std::uint32_t> scope;
    for (auto id : involved) scope.insert(scope.end(), factors[id].scope.begin(), factors[id].scope.end());
    std::sort(scope.begin(), scope.end());
    scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
    std::vector<std::uint32_t> rest;
    for (auto u : scope)
      if (u != v) rest.push_back(u);

    const auto rest_size = static_cast<std::size_t>(scope_size(rest, net.ranges));
    const std::uint32_t range = net.ranges[v];
    // per involved factor: stride of each rest var and of v
    std::vector<std::vector<std::size_t>> rest_strides(involved.size(), std::vector<std::size_t>(rest.size(), 0));
    std::vector<std::size_t> v_stride(involved.size(), 0);
    for (std::size_t k = 0; k < involved.size(); ++k) {
      const auto& f = factors[involved[k]];
      const auto strides = strides_for(f.scope, net.ranges);
      for (std::size_t i = 0; i < f.scope.size(); ++i) {
        if (f.scope[i] == v) {
          v_stride[k] = strides[i];
        } else {
          auto r = std::lower_bound(rest.begin(), rest.end(), f.scope[i]) - rest.begin();
          rest_strides[k][static_cast<std::size_t>(r)] = strides[i];
        }
      }
    }
    DenseFactor message{rest, std::vector<double>(rest_size)};
    Choice choice{rest, std::vector<std::uint32_t>(rest_size)};
    std::vector<std::uint32_t> digits(rest.size(), 0);
    std::vector<std::size_t> base(involved.size(), 0);
    for (std::size_t idx = 0; idx < rest_size; ++idx) {
      double best = kNegInf;
      std::uint32_t arg = 0;
      for (std::uint32_t x = 0; x < range; ++x) {
        double sum = 0.0;
        for (std::size_t k = 0; k < involved.size(); ++k) {
          const double w = factors[involved[k]].values[base[k] + x * v_stride[k]];
          if (w == kNegInf) {
            sum = kNegInf;
            break;
          }
          sum += w;
        }
        if (sum > best) {
          best = sum;
          arg = x;
        }
      }
      message.values[idx] = best;
      choice.best_value[idx] = arg;
      for (std::size_t i = digits.size(); i-- > 0;) {
        if (digits[i] + 1 < net.ranges[rest[i]]) {
          ++digits[i];
          for (std::size_t k = 0; k < involved.size(); ++k) base[k] += rest_strides[k][i];
          break;
        }
        for (std::size_t k = 0; k < involved.size(); ++k) base[k] -= rest_strides[k][i] * digits[i];
        digits[i] = 0;
      }
    }
    for (auto id : involved) {
      alive[id] = false;
      factors[id].values.clear();
      factors[id].values.shrink_to_fit();
    }
    choices[v] = std::move(choice);
    if (rest.empty()) {
      const double w = message.values[0];
      constant = (w == kNegInf || constant == kNegInf) ? kNegInf : constant + w;
    } else {
      add_factor(std::move(message));
    }
  }

  std::vector<std::uint32_t> values(n, 0);
  for (std::size_t i = order.size(); i-- > 0;) {
    const auto v = order[i];
    const auto& c = choices[v];
    std::size_t idx = 0;
    for (auto u : c.scope) idx = idx * net.ranges[u] + values[u];
    values[v] = c.best_value[idx];
  }

  const double exact = net.total(values);
  const bool agree = (exact == kNegInf && constant == kNegInf) ||
                     (exact != kNegInf && constant != kNegInf &&
                      std::abs(exact - constant) <= 1e-9 * std::max(1.0, std::abs(exact)));
  if (!agree)
    throw ConsistencyFailure("variable elimination optimum " + std::to_string(constant) +
                             " disagrees with the weight of its argmax " + std::to_string(exact));

  MpeResult result;
  result.assignment = net.to_assignment(values);
  result.log_weight = exact;
  result.engine = "ve";
  result.stats.eliminated = order.size();
  result.stats.random_variables = n;
  result.stats.ground_factors = net.factors.size();
  result.stats.elapsed_ms = elapsed_ms(start);
  return result;
}

}  // namespace uarmpe
