#include "feedback/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "feedback/error.hpp"

namespace feedback {

namespace {

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<DayBand> day_bands(const RunLog& log) {
  std::vector<DayBand> out;
  std::vector<double> column(static_cast<std::size_t>(log.reps()));
  for (std::int64_t day = 0; day < log.days(); ++day) {
    for (std::int64_t rep = 0; rep < log.reps(); ++rep) {
      column[static_cast<std::size_t>(rep)] = log.value(log.row(rep, day));
    }
    out.push_back({day + 1, spread(column)});
  }
  return out;
}

std::string format_bands(const std::vector<DayBand>& bands) {
  std::string out = "day,q25,median,q75\n";
  for (const auto& b : bands) {
    out += std::to_string(b.day) + "," + num(b.spread.q25) + "," + num(b.spread.median) + "," + num(b.spread.q75) + "\n";
  }
  return out;
}

std::string render_band_svg(const std::vector<DayBand>& bands, const PlotSpec& spec) {
  if (bands.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to plot");
  const double width = 720.0;
  const double height = 420.0;
  const double left = 64.0;
  const double right = 24.0;
  const double top = 40.0;
  const double bottom = 52.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const double last_day = static_cast<double>(bands.back().day);
  const double first_day = static_cast<double>(bands.front().day);
  const double span = std::max(1.0, last_day - first_day);
  auto x = [&](double day) { return left + (day - first_day) / span * plot_w; };
  auto y = [&](double v) { return top + (1.0 - std::clamp(v, 0.0, 1.0)) * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" + fixed(height, 0) +
         "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0) + "\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fixed(width / 2, 1) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         escape_xml(spec.title) + "</text>\n";

  // grid and y ticks
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    svg += "<line x1=\"" + fixed(left, 1) + "\" x2=\"" + fixed(left + plot_w, 1) + "\" y1=\"" + fixed(y(v), 1) +
           "\" y2=\"" + fixed(y(v), 1) + "\" stroke=\"#e0e0e0\"/>\n";
    svg += "<text x=\"" + fixed(left - 8, 1) + "\" y=\"" + fixed(y(v) + 4, 1) +
           "\" text-anchor=\"end\" font-size=\"11\">" + fixed(v, 2) + "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double day = first_day + span * i / 5.0;
    svg += "<text x=\"" + fixed(x(day), 1) + "\" y=\"" + fixed(top + plot_h + 18, 1) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + fixed(day, 0) + "</text>\n";
  }
  svg += "<rect x=\"" + fixed(left, 1) + "\" y=\"" + fixed(top, 1) + "\" width=\"" + fixed(plot_w, 1) +
         "\" height=\"" + fixed(plot_h, 1) + "\" fill=\"none\" stroke=\"#444\"/>\n";

  // interquartile band
  std::string band;
  for (const auto& b : bands) band += fixed(x(static_cast<double>(b.day)), 2) + "," + fixed(y(b.spread.q75), 2) + " ";
  for (auto it = bands.rbegin(); it != bands.rend(); ++it) {
    band += fixed(x(static_cast<double>(it->day)), 2) + "," + fixed(y(it->spread.q25), 2) + " ";
  }
  svg += "<polygon points=\"" + band + "\" fill=\"#4c78a8\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";

  std::string median;
  for (const auto& b : bands) median += fixed(x(static_cast<double>(b.day)), 2) + "," + fixed(y(b.spread.median), 2) + " ";
  svg += "<polyline points=\"" + median + "\" fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"1.5\"/>\n";

  if (spec.target && std::isfinite(*spec.target)) {
    const double ty = y(*spec.target);
    svg += "<line x1=\"" + fixed(left, 1) + "\" x2=\"" + fixed(left + plot_w, 1) + "\" y1=\"" + fixed(ty, 2) +
           "\" y2=\"" + fixed(ty, 2) + "\" stroke=\"#c0392b\" stroke-dasharray=\"6,4\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + fixed(left + plot_w - 4, 1) + "\" y=\"" + fixed(ty - 6, 1) +
           "\" text-anchor=\"end\" font-size=\"11\" fill=\"#c0392b\">target " + fixed(*spec.target, 3) + "</text>\n";
  }
  svg += "<text x=\"" + fixed(left + plot_w / 2, 1) + "\" y=\"" + fixed(height - 12, 1) +
         "\" text-anchor=\"middle\" font-size=\"12\">day</text>\n";
  svg += "<text transform=\"translate(16," + fixed(top + plot_h / 2, 1) +
         ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" + escape_xml(spec.y_label) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

CheckOutcome evaluate_check(const CheckSpec& check, const ScenarioConfig& cfg, const Spread& terminal,
                            const std::map<std::string, double>& iqr_of) {
  CheckOutcome out;
  const double m = terminal.median;
  auto record = [&](bool ok, const std::string& line) {
    out.pass = out.pass && ok;
    out.details.push_back((ok ? "ok: " : "FAILED: ") + line);
  };
  if (check.target) {
    const double target = resolve_target(*check.target, cfg);
    record(std::abs(m - target) <= *check.tolerance,
           "median " + fixed(m) + " within " + fixed(*check.tolerance, 3) + " of " + fixed(target));
  }
  if (check.above) record(m > *check.above, "median " + fixed(m) + " > " + fixed(*check.above, 3));
  if (check.displaced) {
    const double truth = cfg.true_ratio();
    record(std::abs(m - truth) > *check.displaced,
           "median " + fixed(m) + " differs from true ratio " + fixed(truth) + " by more than " +
               fixed(*check.displaced, 3));
  }
  if (check.iqr_vs) {
    auto it = iqr_of.find(*check.iqr_vs);
    if (it == iqr_of.end()) {
      record(false, "no result for '" + *check.iqr_vs + "' to compare IQR against");
    } else {
      record(terminal.iqr() >= *check.iqr_factor * it->second,
             "IQR " + fixed(terminal.iqr()) + " >= " + fixed(*check.iqr_factor, 2) + " x IQR(" + *check.iqr_vs +
                 ") " + fixed(it->second));
    }
  }
  return out;
}

std::string format_summary_csv(const std::vector<ScenarioSummary>& rows) {
  std::string out = "scenario,reps,days,median,q25,q75,iqr,target,check,runtime_s,fallbacks,error\n";
  for (const auto& r : rows) {
    out += r.name + "," + std::to_string(r.reps) + "," + std::to_string(r.days) + ",";
    if (r.error) {
      std::string message = *r.error;
      std::replace(message.begin(), message.end(), '"', '\'');
      out += ",,,,,,," + fixed(r.runtime_seconds, 3) + ",,\"" + message + "\"\n";
      continue;
    }
    out += num(r.terminal.median) + "," + num(r.terminal.q25) + "," + num(r.terminal.q75) + "," +
           num(r.terminal.iqr()) + ",";
    out += (r.target ? num(*r.target) : "") + ",";
    out += r.check ? (r.check->pass ? "pass" : "fail") : "";
    out += "," + fixed(r.runtime_seconds, 3) + "," + std::to_string(r.fallbacks) + ",\n";
  }
  return out;
}

std::string format_summary_table(const std::vector<ScenarioSummary>& rows) {
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::string out = pad("scenario", width) + "  median    q25       q75       iqr       target    check  time\n";
  for (const auto& r : rows) {
    out += pad(r.name, width) + "  ";
    if (r.error) {
      out += "ERROR: " + *r.error + "\n";
      continue;
    }
    out += pad(fixed(r.terminal.median), 10) + pad(fixed(r.terminal.q25), 10) + pad(fixed(r.terminal.q75), 10) +
           pad(fixed(r.terminal.iqr()), 10) + pad(r.target ? fixed(*r.target) : "-", 10) +
           pad(r.check ? (r.check->pass ? "pass" : "FAIL") : "-", 7) + fixed(r.runtime_seconds, 1) + "s\n";
    if (r.check) {
      for (const auto& d : r.check->details) out += pad("", width) + "    " + d + "\n";
    }
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace feedback
