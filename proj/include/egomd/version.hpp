#pragma once

namespace egomd {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kUnitsStamp = "length=nm time=ps mass=amu energy=kJ/mol temperature=K";

}  // namespace egomd
