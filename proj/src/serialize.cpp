#include "besovreg/serialize.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>

#include "besovreg/error.hpp"

namespace besovreg {
namespace {

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

void put_i64(std::ostream& out, std::int64_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::int64_t get_i64(std::istream& in) {
  std::int64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("binary: truncated header");
  return to_little(v);
}

void put_doubles(std::ostream& out, const std::vector<double>& values) {
  for (double v : values) {
    const double le = to_little(v);
    out.write(reinterpret_cast<const char*>(&le), sizeof le);
  }
}

std::vector<double> get_doubles(std::istream& in, std::size_t count) {
  std::vector<double> values(count);
  for (auto& v : values) {
    double le = 0.0;
    if (!in.read(reinterpret_cast<char*>(&le), sizeof le)) throw Error("binary: truncated payload");
    v = to_little(le);
  }
  return values;
}

std::size_t expected_entries(std::int64_t k, std::int64_t d, std::int64_t rho) {
  if (k < 0 || d < 1 || rho < 1 || k * d >= 40) throw Error("binary: invalid header");
  return (std::size_t{1} << (k * d)) * static_cast<std::size_t>(rho);
}

}  // namespace

void write_binary(std::ostream& out, const CoefficientVector& nu) {
  put_i64(out, nu.level);
  put_i64(out, nu.d);
  put_i64(out, nu.r);
  put_i64(out, static_cast<std::int64_t>(nu.rho));
  put_doubles(out, nu.entries);
}

CoefficientVector read_coefficients_binary(std::istream& in) {
  CoefficientVector nu;
  nu.level = static_cast<int>(get_i64(in));
  nu.d = static_cast<int>(get_i64(in));
  nu.r = static_cast<int>(get_i64(in));
  const auto rho = get_i64(in);
  if (static_cast<std::size_t>(rho) != dim_poly(nu.r, nu.d)) throw Error("binary: rho mismatch");
  nu.rho = static_cast<std::size_t>(rho);
  nu.entries = get_doubles(in, expected_entries(nu.level, nu.d, rho));
  return nu;
}

void write_binary(std::ostream& out, const PiecewisePoly& s) {
  put_i64(out, s.level);
  put_i64(out, s.d);
  put_i64(out, s.r);
  put_i64(out, static_cast<std::int64_t>(s.rho()));
  put_i64(out, s.basis->sites_per_axis());
  put_doubles(out, s.coeffs);
}

PiecewisePoly read_piecewise_binary(std::istream& in) {
  const auto k = get_i64(in);
  const auto d = get_i64(in);
  const auto r = get_i64(in);
  const auto rho = get_i64(in);
  const auto sites = get_i64(in);
  PiecewisePoly s = zero_piecewise(static_cast<int>(k), static_cast<int>(d), static_cast<int>(r),
                                   static_cast<int>(sites));
  if (static_cast<std::size_t>(rho) != s.rho()) throw Error("binary: rho mismatch");
  s.coeffs = get_doubles(in, expected_entries(k, d, rho));
  return s;
}

nlohmann::json to_json(const CoefficientVector& nu) {
  return {{"kind", "coefficient_vector"}, {"k", nu.level}, {"d", nu.d},
          {"r", nu.r},   {"rho", nu.rho}, {"entries", nu.entries}};
}

nlohmann::json to_json(const PiecewisePoly& s) {
  return {{"kind", "piecewise_poly"},
          {"k", s.level},
          {"d", s.d},
          {"r", s.r},
          {"rho", s.rho()},
          {"sites_per_axis", s.basis->sites_per_axis()},
          {"coeffs", s.coeffs}};
}

CoefficientVector coefficients_from_json(const nlohmann::json& j) {
  CoefficientVector nu;
  nu.level = j.at("k").get<int>();
  nu.d = j.at("d").get<int>();
  nu.r = j.at("r").get<int>();
  nu.rho = j.at("rho").get<std::size_t>();
  nu.entries = j.at("entries").get<std::vector<double>>();
  if (nu.entries.size() != expected_entries(nu.level, nu.d, static_cast<std::int64_t>(nu.rho))) {
    throw Error("json: entry count mismatch");
  }
  return nu;
}

PiecewisePoly piecewise_from_json(const nlohmann::json& j) {
  PiecewisePoly s = zero_piecewise(j.at("k").get<int>(), j.at("d").get<int>(), j.at("r").get<int>(),
                                   j.at("sites_per_axis").get<int>());
  auto coeffs = j.at("coeffs").get<std::vector<double>>();
  if (coeffs.size() != s.coeffs.size()) throw Error("json: coefficient count mismatch");
  s.coeffs = std::move(coeffs);
  return s;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace besovreg
