#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sobomos {

// Hard ceiling on enumerated monomial bases; the downstream SDPs are dense.
inline constexpr std::size_t kDefaultMonomialCap = 20000;

struct SizeCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One lattice frequency a in Z^n.
struct FreqIndex {
  std::vector<int> coords;

  FreqIndex() = default;
  explicit FreqIndex(std::vector<int> c) : coords(std::move(c)) {}
  FreqIndex(std::initializer_list<int> c) : coords(c) {}

  int dim() const { return static_cast<int>(coords.size()); }
  int sup_norm() const;
  long long squared_norm() const;

  auto operator<=>(const FreqIndex&) const = default;
};

// Finite multiset of frequencies kept in canonical (sorted) order.  Indexes
// one monomial in the Fourier coefficients and one moment of a measure.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<FreqIndex> entries);

  const std::vector<FreqIndex>& entries() const { return entries_; }
  int algebraic_degree() const { return static_cast<int>(entries_.size()); }
  // Largest |a_i| over all entries; 0 for the empty monomial.
  int harmonic_degree() const;
  bool empty() const { return entries_.empty(); }

  bool operator==(const Monomial&) const = default;

  // Graded order: degree first, then lexicographic on the entry list.  Moment
  // matrices indexed this way have lower-degree moment matrices as leading
  // principal submatrices.
  std::strong_ordering operator<=>(const Monomial& o) const {
    if (auto c = entries_.size() <=> o.entries_.size(); c != 0) return c;
    return entries_ <=> o.entries_;
  }

 private:
  std::vector<FreqIndex> entries_;
};

Monomial canonicalize(std::vector<FreqIndex> entries);
Monomial unite(const Monomial& p, const Monomial& q);
// Multiset union is monomial multiplication: c^p * c^q = c^{p u q}.
inline Monomial operator*(const Monomial& p, const Monomial& q) {
  return unite(p, q);
}

// Text form "[(a11,...,a1n);(a21,...,a2n);...]"; empty monomial is "[]".
std::string to_text(const Monomial& m);
std::string to_text(const FreqIndex& a);
Monomial monomial_from_text(const std::string& text, int dim);

// Finite ordered list of distinct monomials (an index set A).
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::vector<Monomial> members);

  const std::vector<Monomial>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  int algebraic_degree() const;  // d_A, 0 when empty
  int harmonic_degree() const;   // rho_A, 0 when empty

 private:
  std::vector<Monomial> members_;
};

// All frequencies with |a|_inf <= rho, in lexicographic order.
std::vector<FreqIndex> frequency_window(int n, int rho);

// All monomials over the given (distinct, sorted) variables with algebraic
// degree <= max_degree, in graded-lex order.  The count is
// binomial(#variables + max_degree, max_degree).
std::vector<Monomial> enumerate_monomials(const std::vector<FreqIndex>& variables,
                                          int max_degree,
                                          std::size_t cap = kDefaultMonomialCap);

// Window form: variables are all frequencies with |a|_inf <= max_harmonic.
std::vector<Monomial> enumerate_monomials(int n, int max_degree, int max_harmonic,
                                          std::size_t cap = kDefaultMonomialCap);

// Shared-prefix evaluation schedule: every monomial value is one multiply on
// top of a previously computed one.
class MonomialEvalPlan {
 public:
  MonomialEvalPlan(std::vector<FreqIndex> variables, int max_degree,
                   std::size_t cap = kDefaultMonomialCap);

  const std::vector<FreqIndex>& variables() const { return variables_; }
  const std::vector<Monomial>& basis() const { return basis_; }

  // values: one scalar per variable, in variable order.  out is resized to
  // basis().size(); out[i] is the value of basis()[i].
  void evaluate(const Eigen::VectorXd& values, Eigen::VectorXd& out) const;

 private:
  std::vector<FreqIndex> variables_;
  std::vector<Monomial> basis_;
  std::vector<std::int32_t> parent_;
  std::vector<std::int32_t> factor_;
};

}  // namespace sobomos
