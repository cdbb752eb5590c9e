#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "signalroot/coverage.hpp"
#include "signalroot/significance.hpp"
#include "signalroot/types.hpp"

namespace signalroot {

// Input records: one row/object per channel with fields
// channel (1-based, contiguous), y1, y2, y3, t, u.

// CSV with header "channel,y1,y2,y3,t,u".  Parse errors carry line numbers.
Dataset parse_dataset_csv(std::istream& in);

// JSON array of objects with the same keys.
Dataset parse_dataset_json(std::istream& in);

// Dispatch on `format` ("csv" or "json"); "auto" decides by file extension.
Dataset load_dataset(const std::string& path, const std::string& format = "auto");

nlohmann::json report_to_json(const InferenceReport& report);
InferenceReport report_from_json(const nlohmann::json& j);
std::string report_to_text(const InferenceReport& report);

nlohmann::json coverage_to_json(const CoverageResult& result);
std::string coverage_to_text(const CoverageResult& result);

void write_table_tsv(std::ostream& out, const std::vector<TableRow>& rows);

}  // namespace signalroot
