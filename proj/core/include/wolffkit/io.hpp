#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "wolffkit/kappa_table.hpp"
#include "wolffkit/potentials.hpp"
#include "wolffkit/solver.hpp"

namespace wolffkit {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Written as leading "# key=value" lines.
using Metadata = std::vector<std::pair<std::string, std::string>>;

Metadata params_metadata(const Params& prm);

void write_field_csv(const Field& f, std::ostream& out, const Metadata& meta = {});
void write_solve_csv(const SolveReport& rep, std::ostream& out, const Metadata& meta = {});
void write_kappa_csv(const KappaTable& kt, std::ostream& out, const Metadata& meta = {});

}  // namespace wolffkit
