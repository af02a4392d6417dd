#pragma once

#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>

#include "besovreg/multiscale.hpp"

namespace besovreg {

// Binary CoefficientVector: four little-endian int64 (k, d, r, rho) followed
// by rho * 2^(kd) little-endian IEEE-754 float64 in canonical order.
void write_binary(std::ostream& out, const CoefficientVector& nu);
CoefficientVector read_coefficients_binary(std::istream& in);

// Binary PiecewisePoly: five little-endian int64 (k, d, r, rho, N) followed
// by the coefficients, N being the basis sites per axis.
void write_binary(std::ostream& out, const PiecewisePoly& s);
PiecewisePoly read_piecewise_binary(std::istream& in);

nlohmann::json to_json(const CoefficientVector& nu);
nlohmann::json to_json(const PiecewisePoly& s);
CoefficientVector coefficients_from_json(const nlohmann::json& j);
PiecewisePoly piecewise_from_json(const nlohmann::json& j);

// 64-bit FNV-1a digest, hex encoded. Used for output fingerprints.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace besovreg
