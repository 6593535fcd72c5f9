#include "spinorlab/io.hpp"
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace spinorlab {

static_assert(std::endian::native == std::endian::little,
              "SPF1 writer assumes a little-endian host");

namespace {

std::string header_line(const GridSpec &g, int fiber) {
  std::ostringstream os;
  os << "SPF1 n=" << g.n << " dims=";
  for (int a = 0; a < g.n; ++a)
    os << (a ? "," : "") << g.sizes[a];
  os << " lens=";
  for (int a = 0; a < g.n; ++a)
    os << (a ? "," : "") << fmt(g.lengths[a]);
  os << " spin=";
  for (int a = 0; a < g.n; ++a)
    os << (g.spin[a] == Spin::periodic ? 'p' : 'a');
  os << " fiber=" << fiber << "\n";
  return os.str();
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct Header {
  GridSpec grid;
  int fiber = 1;
};

Header parse_header(const std::string &line) {
  std::istringstream is(line);
  std::string tok;
  is >> tok;
  if (tok != "SPF1")
    throw std::runtime_error("SPF1: bad magic");
  Header h;
  std::map<std::string, std::string> kv;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("SPF1: malformed header token " + tok);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char *k : {"n", "dims", "lens", "spin", "fiber"})
    if (!kv.count(k))
      throw std::runtime_error(std::string("SPF1: header lacks ") + k);
  h.grid.n = std::stoi(kv["n"]);
  for (auto &s : split(kv["dims"], ','))
    h.grid.sizes.push_back(std::stoi(s));
  for (auto &s : split(kv["lens"], ','))
    h.grid.lengths.push_back(std::stod(s));
  for (char c : kv["spin"]) {
    if (c != 'p' && c != 'a')
      throw std::runtime_error("SPF1: spin flags must be p or a");
    h.grid.spin.push_back(c == 'p' ? Spin::periodic : Spin::antiperiodic);
  }
  h.fiber = std::stoi(kv["fiber"]);
  h.grid.validate();
  return h;
}

std::string read_all(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

} // namespace

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void atomic_write(const std::filesystem::path &path, const std::string &contents) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out)
      throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_spf1(const std::filesystem::path &path, const SpinorField &f) {
  std::string s = header_line(f.grid, f.fiber);
  const std::size_t off = s.size();
  s.resize(off + f.values.size() * 16);
  std::memcpy(s.data() + off, f.values.data(), f.values.size() * 16);
  atomic_write(path, s);
}

void write_spf1(const std::filesystem::path &path, const ScalarField &f) {
  std::string s = header_line(f.grid, 1);
  const std::size_t off = s.size();
  s.resize(off + f.values.size() * 8);
  std::memcpy(s.data() + off, f.values.data(), f.values.size() * 8);
  atomic_write(path, s);
}

SpinorField read_spf1_spinor(const std::filesystem::path &path) {
  const std::string s = read_all(path);
  const auto nl = s.find('\n');
  if (nl == std::string::npos)
    throw std::runtime_error("SPF1: missing header line");
  const Header h = parse_header(s.substr(0, nl));
  SpinorField f(h.grid, h.fiber);
  const std::size_t bytes = f.values.size() * 16;
  if (s.size() - nl - 1 != bytes)
    throw std::runtime_error("SPF1: payload size does not match header");
  std::memcpy(f.values.data(), s.data() + nl + 1, bytes);
  return f;
}

ScalarField read_spf1_scalar(const std::filesystem::path &path) {
  const std::string s = read_all(path);
  const auto nl = s.find('\n');
  if (nl == std::string::npos)
    throw std::runtime_error("SPF1: missing header line");
  const Header h = parse_header(s.substr(0, nl));
  if (h.fiber != 1)
    throw std::runtime_error("SPF1: scalar dump must have fiber=1");
  ScalarField f(h.grid);
  const std::size_t bytes = f.values.size() * 8;
  if (s.size() - nl - 1 != bytes)
    throw std::runtime_error("SPF1: payload size does not match header");
  std::memcpy(f.values.data(), s.data() + nl + 1, bytes);
  return f;
}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header_.size())
    throw std::invalid_argument("CsvTable: row width differs from header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string> &r) {
    for (std::size_t i = 0; i < r.size(); ++i)
      os << (i ? "," : "") << r[i];
    os << "\n";
  };
  line(header_);
  for (const auto &r : rows_)
    line(r);
  return os.str();
}

std::vector<std::map<std::string, std::string>> read_csv(const std::filesystem::path &path) {
  std::istringstream in(read_all(path));
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("CSV: empty file " + path.string());
  const auto header = split(trim(line), ',');
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty())
      continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size())
      throw std::runtime_error("CSV: ragged row in " + path.string());
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < cells.size(); ++i)
      row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::map<std::string, std::string> parse_config(const std::string &text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full))
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key " + full);
    out[full] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config(const std::filesystem::path &path) {
  return parse_config(read_all(path));
}

} // namespace spinorlab
