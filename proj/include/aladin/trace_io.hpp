#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "aladin/runtime.hpp"

namespace aladin {

inline constexpr const char* kTraceCsvHeader =
    "k,err_to_ref,coupling_res,local_feas,triggered,uplink_scalars,coord_wall_ns";

/// One row per iteration under kTraceCsvHeader. Reals are written with 17
/// significant digits so the file round-trips; NaN prints as "nan".
void write_trace_csv(const Trace& trace, std::ostream& out);

/// Sidecar with the resolved RunConfig, trigger iterations, the lambda
/// history and any local-solve warnings.
std::string trace_json(const Trace& trace, int indent = 2);

/// Writes <dir>/<stem>.csv and <dir>/<stem>.json, creating `dir` if needed.
void write_trace_files(const Trace& trace, const std::filesystem::path& dir,
                       const std::string& stem);

std::string run_config_json(const RunConfig& cfg, int indent = -1);

}  // namespace aladin
