#pragma once
#include "spinorlab/grid.hpp"
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace spinorlab {

/*!
  SPF1 dump: one text header line
    SPF1 n=<n> dims=<N_1,..> lens=<L_1,..> spin=<p|a per axis> fiber=<d>
  then little-endian float64 (re, im) pairs, row-major, fiber fastest.
  Scalar fields use fiber=1 and plain real float64 values.
*/
void write_spf1(const std::filesystem::path &path, const SpinorField &f);
void write_spf1(const std::filesystem::path &path, const ScalarField &f);
SpinorField read_spf1_spinor(const std::filesystem::path &path);
ScalarField read_spf1_scalar(const std::filesystem::path &path);

//! Writes to a sibling temporary, then renames over the target.
void atomic_write(const std::filesystem::path &path, const std::string &contents);

//! Shortest round-trip decimal form, '.' separator.
std::string fmt(double x);

class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(std::vector<std::string> row);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

//! Minimal CSV reader: header plus rows, no quoting.
std::vector<std::map<std::string, std::string>> read_csv(const std::filesystem::path &path);

/*!
  Plain key=value config with [section] headers; '#' starts a comment.
  Keys come back as "section.key" (or "key" before any section).
*/
std::map<std::string, std::string> parse_config(const std::string &text);
std::map<std::string, std::string> read_config(const std::filesystem::path &path);

} // namespace spinorlab
