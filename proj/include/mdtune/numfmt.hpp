#pragma once

#include <string>
#include <string_view>

namespace mdtune {

// Shortest decimal text that reads back to exactly `v`.
std::string format_shortest(double v);

// Fixed notation with `digits` decimals (round half away from zero on the
// shortest decimal representation, not on the binary value).
std::string format_fixed(double v, int digits);

// `digits` decimals when that text still reads back to `v`, otherwise the
// shortest exact form. Used by renderers that must round-trip.
std::string format_exact(double v, int digits);

// Round half away from zero at `digits` decimals, operating on the shortest
// decimal representation so 2.675 rounds to 2.68 as printed tables do.
double round_display(double v, int digits);

// Reads a whole string as a '.'-decimal number; no locale, no trailing junk.
bool parse_double(std::string_view text, double& out);

std::string csv_escape(std::string_view field);

}  // namespace mdtune
