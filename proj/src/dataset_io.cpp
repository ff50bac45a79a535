#include "weakform/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "weakform/errors.hpp"

namespace weakform {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("malformed number: '" + s + "'");
  return v;
}

namespace {

void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# grid:";
  for (int a = 0; a < d.grid().ndim(); ++a) {
    const Axis& ax = d.grid().axis(a);
    if (a > 0) out << " ;";
    out << ' ' << ax.n << ' ' << format_double(ax.lo) << ' ' << format_double(ax.hi);
  }
  out << " ; components: " << d.components() << '\n';
  const std::vector<double>& v = d.values();
  int c = d.components();
  std::string line;
  for (std::int64_t i = 0; i < d.num_samples(); ++i) {
    line.clear();
    for (int j = 0; j < c; ++j) {
      if (j > 0) line += ',';
      line += format_double(v[i * c + j]);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty file: " + path);
  const std::string prefix = "# grid:";
  if (header.rfind(prefix, 0) != 0) throw IoError("malformed csv header: " + path);

  std::vector<std::string> fields = split(header.substr(prefix.size()), ';');
  if (fields.size() < 2) throw IoError("malformed csv header: " + path);
  std::string comp_field = strip(fields.back());
  const std::string comp_prefix = "components:";
  if (comp_field.rfind(comp_prefix, 0) != 0)
    throw IoError("malformed csv header (missing components): " + path);
  int components = static_cast<int>(parse_double(strip(comp_field.substr(comp_prefix.size()))));

  std::vector<Axis> axes;
  for (std::size_t a = 0; a + 1 < fields.size(); ++a) {
    std::istringstream fs(fields[a]);
    Axis ax;
    if (!(fs >> ax.n >> ax.lo >> ax.hi)) throw IoError("malformed axis spec: " + path);
    axes.push_back(ax);
  }
  Grid grid(axes);

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(grid.num_points() * components));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    for (const std::string& tok : split(line, ',')) values.push_back(parse_double(strip(tok)));
  }
  if (static_cast<std::int64_t>(values.size()) != grid.num_points() * components)
    throw IoError("csv sample count does not match grid shape: " + path);
  for (double v : values)
    if (!std::isfinite(v)) throw IoError("non-finite value in csv: " + path);
  return Dataset(std::move(grid), components, std::move(values));
}

template <class T>
void write_raw(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::ifstream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated binary dataset: " + path);
  return v;
}

void write_binary(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write("WFSD", 4);
  write_raw<std::uint32_t>(out, 1);
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(d.grid().ndim()));
  for (const Axis& ax : d.grid().axes()) {
    write_raw<std::uint64_t>(out, static_cast<std::uint64_t>(ax.n));
    write_raw<double>(out, ax.lo);
    write_raw<double>(out, ax.hi);
  }
  write_raw<std::uint64_t>(out, static_cast<std::uint64_t>(d.components()));
  out.write(reinterpret_cast<const char*>(d.values().data()),
            static_cast<std::streamsize>(d.values().size() * sizeof(double)));
  if (!out) throw IoError("write failed: " + path);
}

Dataset read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "WFSD", 4) != 0)
    throw IoError("bad magic (not a binary dataset): " + path);
  std::uint32_t version = read_raw<std::uint32_t>(in, path);
  if (version != 1) throw IoError("unsupported dataset version " + std::to_string(version));
  std::uint32_t ndim = read_raw<std::uint32_t>(in, path);
  if (ndim == 0 || ndim > 16) throw IoError("implausible axis count: " + path);
  std::vector<Axis> axes(ndim);
  for (Axis& ax : axes) {
    ax.n = static_cast<std::int64_t>(read_raw<std::uint64_t>(in, path));
    ax.lo = read_raw<double>(in, path);
    ax.hi = read_raw<double>(in, path);
  }
  Grid grid(axes);
  std::int64_t components = static_cast<std::int64_t>(read_raw<std::uint64_t>(in, path));
  if (components < 1 || components > 1024) throw IoError("implausible component count: " + path);
  std::vector<double> values(static_cast<std::size_t>(grid.num_points() * components));
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw IoError("truncated binary dataset: " + path);
  for (double v : values)
    if (!std::isfinite(v)) throw IoError("non-finite value in binary dataset: " + path);
  return Dataset(std::move(grid), static_cast<int>(components), std::move(values));
}

}  // namespace

void write_dataset(const Dataset& d, const std::string& path, FileFormat format) {
  if (format == FileFormat::Csv)
    write_csv(d, path);
  else
    write_binary(d, path);
}

Dataset read_dataset(const std::string& path, FileFormat format) {
  return format == FileFormat::Csv ? read_csv(path) : read_binary(path);
}

}  // namespace weakform
