#include "rbpomdp/core/rng.hpp"

#include <iomanip>
#include <sstream>

namespace rbpomdp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::child(std::uint64_t id) const {
  return Rng(splitmix64(seed_ ^ splitmix64(id + 0x632be59bd9b4e019ULL)));
}

Rng Rng::split() { return Rng(engine_()); }

double Rng::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double Rng::normal() { return normal_(engine_); }

std::size_t Rng::uniform_index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

Vector Rng::normal_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

std::string format_matrix(const Matrix& m) {
  std::ostringstream out;
  out << std::setprecision(10);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << (r == 0 ? "[[" : " [");
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ", ";
      out << m(r, c);
    }
    out << (r + 1 == m.rows() ? "]]" : "]\n");
  }
  return out.str();
}

}  // namespace rbpomdp
