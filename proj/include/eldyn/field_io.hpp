#pragma once

#include <iosfwd>
#include <string>

#include "eldyn/grid.hpp"

namespace eldyn {

/// ELDYN1 record: 6-byte ASCII magic "ELDYN1", u32 LE d, u32 LE n,
/// u32 LE rank code (0 scalar, 1 vector, 2 matrix), then the f64 LE payload,
/// row-major over grid points with the component index fastest.
void write_field_record(std::ostream& os, const PeriodicField& f);
PeriodicField read_field_record(std::istream& is);

/// Single-record file helpers; load rejects trailing bytes.
void save_field(const std::string& path, const PeriodicField& f);
PeriodicField load_field(const std::string& path);

}  // namespace eldyn
