#pragma once

#include <string>

#include "akconj/scenarios.hpp"

namespace akconj {

/** Stable JSON image of a run report.  Field order is fixed and all
    arbitrary-precision values are rendered as decimal strings, so two runs
    with the same configuration and seed serialize to identical bytes. */
std::string report_json(const RunReport& report);

/// schedule serialized on its own (same shape as the "schedule" object above)
std::string schedule_json(const Schedule& sched,
                          const std::vector<Certificate>& certificates = {});

/** Parse a schedule from JSON text.  Accepts either a bare schedule object
    or a full report/schedule file wrapping one under "schedule". */
Schedule schedule_from_json(const std::string& text);

/// overlay config fields present in the JSON text onto the given defaults
RunConfig config_from_json(const std::string& text, RunConfig base = {});

/** Write the run directory for a finished report: schedule and certificate
    CSVs, an orbit trace, an SVG sketch of the last invariant curve, and
    report.json itself (always written last).  Every file goes through a
    temp-file rename so a crash never leaves a half-written artifact.
    Appends one ArtifactRef per file to report.artifacts. */
void emit_artifacts(RunReport& report, const RunConfig& config);

}  // namespace akconj
