#include "feedback/runlog_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

#include "feedback/error.hpp"

namespace feedback {

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

void append_number(std::string& out, std::int64_t v) {
  char buf[24];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void mismatch(const std::string& source, std::size_t line, const std::string& column,
                           const std::string& what) {
  throw Error(ErrorKind::SchemaMismatch,
              source + ":" + std::to_string(line) + ": column '" + column + "': " + what);
}

template <class T>
T parse_field(std::string_view field, const std::string& source, std::size_t line, const std::string& column) {
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) mismatch(source, line, column, "cannot parse '" + std::string(field) + "'");
  return value;
}

struct Row {
  std::int64_t rep = 0;
  std::int64_t day = 0;
  std::size_t deployed = 0;
  double value = 0.0;
  std::vector<double> rates;
  std::vector<std::int64_t> discovered;
  std::vector<std::int64_t> reported;
  bool accepted = false;
};

}  // namespace

std::vector<std::string> runlog_columns(std::size_t regions) {
  std::vector<std::string> cols{"rep", "day", "deployed", "frac_or_prob"};
  for (const char* prefix : {"rate_", "disc_", "rep_"}) {
    for (std::size_t r = 0; r < regions; ++r) cols.push_back(prefix + std::to_string(r));
  }
  cols.emplace_back("accepted");
  return cols;
}

RunLogMeta meta_for(const ScenarioConfig& cfg) {
  return {cfg.engine == Engine::Urn ? "urn" : "sepp", cfg.true_ratio()};
}

std::string format_runlog(const RunLog& log, const RunLogMeta& meta) {
  const std::size_t n = log.regions();
  std::string out;
  out.reserve(log.rows() * (40 + 24 * n) + 256);
  out += kRunLogVersionLine;
  out += "\n# scenario=" + log.scenario() + " engine=" + meta.engine + " labels=";
  for (std::size_t r = 0; r < n; ++r) out += (r ? "," : "") + log.labels()[r];
  out += " true_ratio=";
  append_number(out, meta.true_ratio);
  out += "\n";
  const auto cols = runlog_columns(n);
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";

  for (std::int64_t rep = 0; rep < log.reps(); ++rep) {
    for (std::int64_t day = 0; day < log.days(); ++day) {
      const std::size_t row = log.row(rep, day);
      append_number(out, rep);
      out += ',';
      append_number(out, day + 1);
      out += ',';
      append_number(out, static_cast<std::int64_t>(log.deployed(row)));
      out += ',';
      append_number(out, log.value(row));
      for (double v : log.rates(row)) {
        out += ',';
        append_number(out, v);
      }
      for (auto v : log.discovered(row)) {
        out += ',';
        append_number(out, v);
      }
      for (auto v : log.reported(row)) {
        out += ',';
        append_number(out, v);
      }
      out += log.accepted(row) ? ",1\n" : ",0\n";
    }
  }
  return out;
}

void write_runlog(const std::string& path, const RunLog& log, const RunLogMeta& meta) {
  const std::string text = format_runlog(log, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

LoadedRunLog parse_runlog(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw Error(ErrorKind::SchemaMismatch, source + ": empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRunLogVersionLine) {
    throw Error(ErrorKind::SchemaMismatch, source + ":1: expected version line '" + std::string(kRunLogVersionLine) +
                                               "', got '" + line + "'");
  }

  LoadedRunLog loaded;
  std::string header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("#", 0) != 0) {
      header = line;
      break;
    }
    for (auto token : split(std::string_view(line).substr(1), ' ')) {
      const auto eq = token.find('=');
      if (token.empty() || eq == std::string_view::npos) continue;
      loaded.meta[std::string(token.substr(0, eq))] = std::string(token.substr(eq + 1));
    }
  }
  if (header.empty()) throw Error(ErrorKind::SchemaMismatch, source + ": missing column header");

  const auto names = split(header, ',');
  if (names.size() < 8 || (names.size() - 5) % 3 != 0) {
    // name the first column that breaks the expected layout
    const auto two = runlog_columns(2);
    for (std::size_t i = 0; i < names.size() && i < two.size(); ++i) {
      if (names[i] != two[i] && i < 4) mismatch(source, line_no, std::string(names[i]), "expected '" + two[i] + "'");
    }
    mismatch(source, line_no, std::string(names.back()), "column count does not fit the per-region layout");
  }
  const std::size_t n = (names.size() - 5) / 3;
  const auto expected = runlog_columns(n);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (names[i] != expected[i]) mismatch(source, line_no, std::string(names[i]), "expected '" + expected[i] + "'");
  }

  std::vector<std::string> labels;
  if (auto it = loaded.meta.find("labels"); it != loaded.meta.end()) {
    for (auto l : split(it->second, ',')) labels.emplace_back(l);
    if (labels.size() != n) {
      throw Error(ErrorKind::SchemaMismatch, source + ": metadata labels do not match the region columns");
    }
  } else {
    for (std::size_t r = 0; r < n; ++r) labels.push_back(std::to_string(r));
  }

  std::vector<Row> rows;
  std::int64_t max_rep = -1;
  std::int64_t max_day = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() < expected.size()) mismatch(source, line_no, expected[fields.size()], "missing");
    if (fields.size() > expected.size()) mismatch(source, line_no, "#" + std::to_string(fields.size()), "extra column");
    Row row;
    std::size_t c = 0;
    row.rep = parse_field<std::int64_t>(fields[c], source, line_no, expected[c]);
    ++c;
    row.day = parse_field<std::int64_t>(fields[c], source, line_no, expected[c]);
    ++c;
    row.deployed = parse_field<std::size_t>(fields[c], source, line_no, expected[c]);
    if (row.deployed >= n) mismatch(source, line_no, expected[c], "region index out of range");
    ++c;
    row.value = parse_field<double>(fields[c], source, line_no, expected[c]);
    ++c;
    for (std::size_t r = 0; r < n; ++r, ++c) row.rates.push_back(parse_field<double>(fields[c], source, line_no, expected[c]));
    for (std::size_t r = 0; r < n; ++r, ++c) {
      row.discovered.push_back(parse_field<std::int64_t>(fields[c], source, line_no, expected[c]));
    }
    for (std::size_t r = 0; r < n; ++r, ++c) {
      row.reported.push_back(parse_field<std::int64_t>(fields[c], source, line_no, expected[c]));
    }
    const auto accepted = parse_field<int>(fields[c], source, line_no, expected[c]);
    if (accepted != 0 && accepted != 1) mismatch(source, line_no, expected[c], "must be 0 or 1");
    row.accepted = accepted == 1;
    if (row.rep < 0) mismatch(source, line_no, "rep", "must be >= 0");
    if (row.day < 1) mismatch(source, line_no, "day", "must be >= 1");
    max_rep = std::max(max_rep, row.rep);
    max_day = std::max(max_day, row.day);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::SchemaMismatch, source + ": no data rows");

  RunLog log(loaded.meta.count("scenario") ? loaded.meta["scenario"] : std::string("unnamed"), labels, max_rep + 1,
             max_day);
  if (rows.size() != static_cast<std::size_t>((max_rep + 1) * max_day)) {
    throw Error(ErrorKind::SchemaMismatch, source + ": columns 'rep','day' do not form a complete grid");
  }
  std::vector<char> seen(rows.size(), 0);
  for (const Row& r : rows) {
    const std::size_t idx = log.row(r.rep, r.day - 1);
    if (seen[idx]) {
      throw Error(ErrorKind::SchemaMismatch, source + ": columns 'rep','day': duplicate row for rep " +
                                                 std::to_string(r.rep) + " day " + std::to_string(r.day));
    }
    seen[idx] = 1;
    log.set(idx, r.deployed, r.value, r.rates, r.discovered, r.reported, r.accepted);
  }
  loaded.log = std::move(log);
  return loaded;
}

LoadedRunLog read_runlog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_runlog(buf.str(), path);
}

}  // namespace feedback
