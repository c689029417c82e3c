#pragma once

#include <string>

namespace coldloop {

// Shortest round-trip decimal form, always with '.' as the decimal point and
// independent of the global locale.
std::string format_number(double value);

inline const char* format_flag(bool value) { return value ? "1" : "0"; }

}  // namespace coldloop
