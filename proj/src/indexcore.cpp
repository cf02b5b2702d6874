#include "sobomos/indexcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace sobomos {

namespace {

void check_common_dim(const std::vector<FreqIndex>& entries) {
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].dim() != entries[0].dim()) {
      throw std::invalid_argument("monomial entries have mixed dimensions: " +
                                  to_text(entries[0]) + " vs " + to_text(entries[i]));
    }
  }
}

// binomial(n_vars + degree, degree) without overflow, saturating at huge.
double monomial_count(std::size_t n_vars, int degree) {
  long double count = 1.0L;
  for (int i = 1; i <= degree; ++i) {
    count *= static_cast<long double>(n_vars + i) / i;
    if (count > 1e18L) return 1e18;
  }
  return static_cast<double>(count);
}

void check_cap(std::size_t n_vars, int degree, std::size_t cap) {
  const double count = monomial_count(n_vars, degree);
  if (count > static_cast<double>(cap)) {
    std::ostringstream msg;
    msg << "monomial basis over " << n_vars << " variables up to degree " << degree
        << " has " << count << " elements, above the cap of " << cap;
    throw SizeCapError(msg.str());
  }
}

}  // namespace

int FreqIndex::sup_norm() const {
  int s = 0;
  for (int c : coords) s = std::max(s, std::abs(c));
  return s;
}

long long FreqIndex::squared_norm() const {
  long long s = 0;
  for (int c : coords) s += static_cast<long long>(c) * c;
  return s;
}

Monomial::Monomial(std::vector<FreqIndex> entries) : entries_(std::move(entries)) {
  check_common_dim(entries_);
  std::sort(entries_.begin(), entries_.end());
}

int Monomial::harmonic_degree() const {
  int d = 0;
  for (const auto& a : entries_) d = std::max(d, a.sup_norm());
  return d;
}

Monomial canonicalize(std::vector<FreqIndex> entries) {
  return Monomial(std::move(entries));
}

Monomial unite(const Monomial& p, const Monomial& q) {
  if (!p.empty() && !q.empty() &&
      p.entries()[0].dim() != q.entries()[0].dim()) {
    throw std::invalid_argument("monomial union across dimensions: " + to_text(p) +
                                " vs " + to_text(q));
  }
  std::vector<FreqIndex> merged;
  merged.reserve(p.entries().size() + q.entries().size());
  std::merge(p.entries().begin(), p.entries().end(), q.entries().begin(),
             q.entries().end(), std::back_inserter(merged));
  return Monomial(std::move(merged));
}

std::string to_text(const FreqIndex& a) {
  std::string s = "(";
  for (int i = 0; i < a.dim(); ++i) {
    if (i > 0) s += ',';
    s += std::to_string(a.coords[i]);
  }
  s += ')';
  return s;
}

std::string to_text(const Monomial& m) {
  std::string s = "[";
  for (std::size_t i = 0; i < m.entries().size(); ++i) {
    if (i > 0) s += ';';
    s += to_text(m.entries()[i]);
  }
  s += ']';
  return s;
}

Monomial monomial_from_text(const std::string& text, int dim) {
  auto fail = [&text](const std::string& why) -> Monomial {
    throw std::invalid_argument("bad monomial text '" + text + "': " + why);
  };
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_ws();
  if (i >= text.size() || text[i] != '[') return fail("expected '['");
  ++i;
  std::vector<FreqIndex> entries;
  skip_ws();
  while (i < text.size() && text[i] != ']') {
    if (text[i] != '(') return fail("expected '('");
    ++i;
    std::vector<int> coords;
    while (true) {
      skip_ws();
      std::size_t pos = 0;
      int value = 0;
      try {
        value = std::stoi(text.substr(i), &pos);
      } catch (const std::exception&) {
        return fail("expected integer coordinate");
      }
      i += pos;
      coords.push_back(value);
      skip_ws();
      if (i >= text.size()) return fail("unterminated entry");
      if (text[i] == ',') {
        ++i;
        continue;
      }
      if (text[i] == ')') {
        ++i;
        break;
      }
      return fail("expected ',' or ')'");
    }
    if (static_cast<int>(coords.size()) != dim) return fail("wrong coordinate count");
    entries.emplace_back(std::move(coords));
    skip_ws();
    if (i < text.size() && text[i] == ';') {
      ++i;
      skip_ws();
    }
  }
  if (i >= text.size() || text[i] != ']') return fail("expected ']'");
  ++i;
  skip_ws();
  if (i != text.size()) return fail("trailing characters");
  return canonicalize(std::move(entries));
}

IndexSet::IndexSet(std::vector<Monomial> members) : members_(std::move(members)) {
  auto sorted = members_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("index set contains duplicate monomials");
  }
}

int IndexSet::algebraic_degree() const {
  int d = 0;
  for (const auto& m : members_) d = std::max(d, m.algebraic_degree());
  return d;
}

int IndexSet::harmonic_degree() const {
  int d = 0;
  for (const auto& m : members_) d = std::max(d, m.harmonic_degree());
  return d;
}

std::vector<FreqIndex> frequency_window(int n, int rho) {
  if (n < 1) throw std::invalid_argument("torus dimension must be >= 1");
  if (rho < 0) throw std::invalid_argument("harmonic degree must be >= 0");
  std::vector<FreqIndex> out;
  std::vector<int> coords(n, -rho);
  while (true) {
    out.emplace_back(coords);
    int i = n - 1;
    while (i >= 0 && coords[i] == rho) coords[i--] = -rho;
    if (i < 0) break;
    ++coords[i];
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Monomial> enumerate_monomials(const std::vector<FreqIndex>& variables,
                                          int max_degree, std::size_t cap) {
  MonomialEvalPlan plan(variables, max_degree, cap);
  return plan.basis();
}

std::vector<Monomial> enumerate_monomials(int n, int max_degree, int max_harmonic,
                                          std::size_t cap) {
  return enumerate_monomials(frequency_window(n, max_harmonic), max_degree, cap);
}

MonomialEvalPlan::MonomialEvalPlan(std::vector<FreqIndex> variables, int max_degree,
                                   std::size_t cap)
    : variables_(std::move(variables)) {
  if (max_degree < 0) throw std::invalid_argument("max_degree must be >= 0");
  check_common_dim(variables_);
  if (!std::is_sorted(variables_.begin(), variables_.end())) {
    throw std::invalid_argument("variables must be sorted");
  }
  if (std::adjacent_find(variables_.begin(), variables_.end()) != variables_.end()) {
    throw std::invalid_argument("variables must be distinct");
  }
  check_cap(variables_.size(), max_degree, cap);

  basis_.emplace_back();
  parent_.push_back(-1);
  factor_.push_back(-1);

  // Extend degree d-1 monomials by one variable of index >= their last factor;
  // entries stay sorted because variables are.
  struct Node {
    std::int32_t index;
    std::int32_t last_var;
  };
  std::vector<Node> level = {{0, 0}};
  for (int d = 1; d <= max_degree; ++d) {
    std::vector<Node> next;
    for (const Node& node : level) {
      for (std::int32_t v = node.last_var; v < static_cast<std::int32_t>(variables_.size()); ++v) {
        auto entries = basis_[node.index].entries();
        entries.push_back(variables_[v]);
        basis_.push_back(Monomial(std::move(entries)));
        parent_.push_back(node.index);
        factor_.push_back(v);
        next.push_back({static_cast<std::int32_t>(basis_.size()) - 1, v});
      }
    }
    level = std::move(next);
  }
}

void MonomialEvalPlan::evaluate(const Eigen::VectorXd& values, Eigen::VectorXd& out) const {
  if (values.size() != static_cast<Eigen::Index>(variables_.size())) {
    throw std::invalid_argument("evaluation point has wrong variable count");
  }
  out.resize(static_cast<Eigen::Index>(basis_.size()));
  out[0] = 1.0;
  for (std::size_t i = 1; i < basis_.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = out[parent_[i]] * values[factor_[i]];
  }
}

}  // namespace sobomos
