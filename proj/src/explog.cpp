#include "fdyn/explog.hpp"

#include <functional>
#include <map>

#include "fdyn/matrix.hpp"

namespace fdyn {

namespace {

std::vector<Mono> monomials_up_to(int n, int D) {
  std::vector<Mono> out;
  std::vector<int> e(n, 0);
  // enumerate by degree
  for (int d = 0; d <= D; ++d) {
    std::function<void(int, int)> rec = [&](int i, int left) {
      if (i == n - 1) {
        e[i] = left;
        out.push_back(mono_from(e));
        return;
      }
      for (int v = left; v >= 0; --v) {
        e[i] = v;
        rec(i + 1, left - v);
      }
    };
    rec(0, d);
  }
  return out;
}

}  // namespace

IdealCheck ideal_contains(const JetTuple<GaussQ>& gens, const JetTuple<GaussQ>& g, int N) {
  IdealCheck res;
  res.budget = N;
  int n = gens.empty() ? 1 : gens[0].nvars();
  auto eqs = monomials_up_to(n, N);
  std::map<Mono, int> eq_index;
  for (std::size_t i = 0; i < eqs.size(); ++i) eq_index[eqs[i]] = static_cast<int>(i);
  // unknown columns: (generator j, multiplier monomial beta)
  struct Col { int j; Mono beta; };
  std::vector<Col> cols;
  for (std::size_t j = 0; j < gens.size(); ++j) {
    int o = gens[j].order();
    if (o == kInfOrder || o > N) continue;
    for (Mono b : monomials_up_to(n, N - o)) cols.push_back({static_cast<int>(j), b});
  }
  // column vectors of products beta * gen_j
  std::vector<std::vector<std::pair<int, GaussQ>>> colvec(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (const auto& [m, v] : gens[cols[c].j].terms()) {
      Mono mm = m + cols[c].beta;
      if (mono_degree(mm) <= N) colvec[c].push_back({eq_index[mm], v});
    }
  for (const auto& target : g) {
    IncrementalEchelon ech(static_cast<int>(cols.size()));
    // rows of the system in graded order
    std::vector<std::vector<GaussQ>> rows(eqs.size(), std::vector<GaussQ>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
      for (const auto& [r, v] : colvec[c]) rows[r][c] = v;
    for (std::size_t r = 0; r < eqs.size(); ++r) {
      GaussQ rhs = target.coeff(eqs[r]);
      if (!ech.add(rows[r], rhs)) {
        res.equal = false;
        res.witness = mono_to_string(eqs[r], default_var_names(n));
        return res;
      }
    }
  }
  return res;
}

IdealCheck fixed_ideal_equal(const MapQ& F) {
  FieldQ X = log_map(F);
  int n = F.nvars();
  int N = std::min(F.trunc(), X.trunc());
  JetTuple<GaussQ> f, a;
  for (int i = 0; i < n; ++i) {
    f.push_back(lowered(F.comp[i] - JetQ::var(n, F.comp[i].trunc(), i), N));
    a.push_back(lowered(X.comp[i], N));
  }
  IdealCheck r1 = ideal_contains(a, f, N);
  if (!r1.equal) return r1;
  return ideal_contains(f, a, N);
}

}  // namespace fdyn
