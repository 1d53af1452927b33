#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "a2l/core/types.hpp"

namespace a2l {

/// Reads every raw trajectory under `path` (a .jsonl file, or a directory whose
/// *.jsonl files are read in lexicographic order). Fails on the first bad line.
std::vector<RawTrajectory> load_raw_dataset(const std::filesystem::path& path);

/// Writes `<dir>/annotated.jsonl` and `<dir>/manifest.json`.
DatasetManifest save_annotated_dataset(const std::vector<AnnotatedTrajectory>& records,
                                       const std::filesystem::path& dir,
                                       const std::string& source = "D_lan");

std::vector<AnnotatedTrajectory> load_annotated_dataset(const std::filesystem::path& path);

/// One-line encodings. Exposed so other modules can stream records.
std::string raw_to_line(const RawTrajectory& t);
RawTrajectory raw_from_line(const std::string& line, std::size_t line_no = 1);
std::string annotated_to_line(const AnnotatedTrajectory& t);
AnnotatedTrajectory annotated_from_line(const std::string& line, std::size_t line_no = 1);

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);

/// Lists the *.jsonl files under `path` (or `path` itself when it is a file).
std::vector<std::filesystem::path> jsonl_inputs(const std::filesystem::path& path);

/// Last component of a directory path, ignoring a trailing separator.
std::string dataset_name(const std::filesystem::path& dir);

/// Writes `text` as UTF-8 with LF endings, creating parent directories; throws IoFailure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace a2l
