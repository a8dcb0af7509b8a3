#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sizenorm/eval.hpp"
#include "sizenorm/freqmatrix.hpp"
#include "sizenorm/optimize.hpp"
#include "sizenorm/sizetype.hpp"

// Interchange files are tab-separated, one record per line, behind a single
// header line of the form
//
//   #sizenorm/<kind>/<version>\t<column>\t<column>...
//
// Readers reject a wrong kind or version. Numbers are written in shortest
// round-trip form so reruns are byte-identical.
namespace sizenorm::records {

inline constexpr int kFormatVersion = 1;

std::string header(std::string_view kind, std::span<const std::string_view> columns);

void write_sales(std::ostream& out, std::span<const SaleRecord> sales);
std::vector<SaleRecord> read_sales(std::istream& in);

/// One record per size: brand, raw_size, size_type_id, sorted_index.
void write_size_types(std::ostream& out, std::span<const SizeType> types);
std::vector<SizeType> read_size_types(std::istream& in);

/// Triples over the stored pairs: type1, size1, type2, size2, mass.
void write_frequency_matrix(std::ostream& out, const FrequencyMatrix& f);
FrequencyMatrix read_frequency_matrix(std::istream& in, const SizeTypeMap& map);

/// size_type_id, raw_size, normalized_value, component_label.
void write_map(std::ostream& out, const NormalizationMap& map);
NormalizationMap read_map(std::istream& in);

void write_cases(std::ostream& out, std::span<const TestCase> cases);
std::vector<TestCase> read_cases(std::istream& in);

/// Per-case prediction traces of an evaluation.
void write_traces(std::ostream& out, std::span<const TestCase> cases, const EvalReport& report);

/// Dense block of the frequency matrix as (size1, size2, mass) rows.
void write_block(std::ostream& out, const FrequencyMatrix& f, std::string_view t1, std::string_view t2);

std::string format_number(double v);

// File wrappers; throw DataError when the file cannot be opened.
std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace sizenorm::records
