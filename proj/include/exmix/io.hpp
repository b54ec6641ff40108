#pragma once

#include "exmix/damex.hpp"
#include "exmix/em.hpp"
#include "exmix/ingest.hpp"
#include "exmix/mixture.hpp"
#include "exmix/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace exmix {

// Header row, then one numeric row per line; empty lines are skipped. Throws
// ParseError with the line number on a malformed, missing or non-numeric cell.
RawDataset read_csv(std::istream& in, const std::string& source = "<stream>");
RawDataset read_csv_file(const std::filesystem::path& path);

// Removes the named column and returns its values. Throws InputError if absent.
std::vector<double> take_column(RawDataset& data, const std::string& name);

std::string to_csv(const RowMatrix& m, const std::vector<std::string>& header);

std::string read_text_file(const std::filesystem::path& path);
// Creates parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& content);

nlohmann::json support_to_json(const SupportSet& support);
SupportSet support_from_json(const nlohmann::json& j);

nlohmann::json theta_to_json(const ThetaParams& theta);
ThetaParams theta_from_json(const nlohmann::json& j);

nlohmann::json fit_to_json(const FitResult& result);

std::string gamma_to_csv(const PosteriorMatrix& gamma, const std::vector<std::size_t>& row_ids);
PosteriorMatrix gamma_from_csv(std::istream& in, std::vector<std::size_t>* row_ids = nullptr);

// One JSON object per line: iteration, q, bound and per-block timings.
std::string trace_to_jsonl(const std::vector<IterationRecord>& trace);

// Parses a JSON document, turning syntax errors into ParseError.
nlohmann::json parse_json(const std::string& text, const std::string& source);

}  // namespace exmix
