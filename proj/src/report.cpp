#include "pickdrop/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace pickdrop {

int percent_half_up(long long num, long long den) {
  if (den <= 0) throw std::invalid_argument("percentage needs a positive denominator");
  if (num < 0) throw std::invalid_argument("percentage needs a non-negative numerator");
  // floor(100 * num / den + 1/2) in integers.
  return static_cast<int>((200 * num + den) / (2 * den));
}

std::optional<int> Fraction::percent() const {
  if (den <= 0) return std::nullopt;
  return percent_half_up(num, den);
}

std::string Fraction::cell() const {
  const auto p = percent();
  return std::to_string(num) + "/" + std::to_string(den) + " (" +
         (p ? std::to_string(*p) + "%" : std::string("-")) + ")";
}

bool PlotTrial::operator==(const PlotTrial& o) const {
  return seed == o.seed && mode == o.mode && start == o.start && pick == o.pick && drop == o.drop &&
         trajectory == o.trajectory;
}

namespace {

auto plot_key(const PlotTrial& t) {
  return std::make_tuple(t.seed, static_cast<int>(t.mode), t.start.x, t.start.y, t.pick.x, t.pick.y,
                         t.drop.x, t.drop.y, t.trajectory.size());
}

std::string format(const char* f, double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

const char* process_title(Process p) {
  switch (p) {
    case Process::RegisterCloud: return "Register Point Cloud";
    case Process::CalculateGrasp: return "Calculate Grasp";
    case Process::ExecuteGrasp: return "Execute Grasp";
    case Process::NavigateToPoint: return "Navigate to Point";
  }
  return "?";
}

std::string pad(std::string s, std::size_t width) {
  // Width counts code points so the plus-minus sign lines up.
  std::size_t visible = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++visible;
  if (visible < width) s.append(width - visible, ' ');
  return s;
}

std::string safe_name(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "scenario" : out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

Report aggregate_metrics(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw std::invalid_argument("cannot aggregate an empty record list");
  Report report;

  std::map<std::string, SetMetrics> sets;
  for (const auto& r : records) {
    SetMetrics& m = sets[r.set];
    m.set = r.set;
    ++m.trials;
    m.p_nav.num += r.pick_nav.reached;
    m.p_nav.den += r.pick_nav.plans;
    m.d_nav.num += r.drop_nav.reached;
    m.d_nav.den += r.drop_nav.plans;
    m.p_grasp.num += r.pick_grasp.successes;
    m.p_grasp.den += r.pick_grasp.attempts;
    m.d_grasp.num += r.drop_grasp.successes;
    m.d_grasp.den += r.drop_grasp.attempts;
    m.task.num += r.task_success ? 1 : 0;
    m.task.den += 1;
  }
  for (auto& [name, m] : sets) report.sets.push_back(m);

  for (Process p : kProcesses)
    for (Site s : {Site::Pick, Site::Drop}) {
      std::vector<double> xs;
      for (const auto& r : records) {
        const auto it = r.durations.find({p, s});
        if (it != r.durations.end()) xs.insert(xs.end(), it->second.begin(), it->second.end());
      }
      // Sorting first makes the floating-point sums independent of record order.
      std::sort(xs.begin(), xs.end());
      TimingRow row{p, s, xs.size(), 0.0, 0.0};
      if (!xs.empty()) {
        double sum = 0.0;
        for (double x : xs) sum += x;
        row.mean = sum / static_cast<double>(xs.size());
        if (xs.size() > 1) {
          double ss = 0.0;
          for (double x : xs) ss += (x - row.mean) * (x - row.mean);
          row.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        }
      }
      report.timing.push_back(row);
    }

  for (const auto& r : records)
    report.plots[r.scenario].push_back({r.seed, r.mode, r.start, r.pick, r.drop, r.trajectory});
  for (auto& [name, trials] : report.plots)
    std::stable_sort(trials.begin(), trials.end(),
                     [](const PlotTrial& a, const PlotTrial& b) { return plot_key(a) < plot_key(b); });
  return report;
}

std::vector<ReportFormat> parse_formats(const std::string& text) {
  std::vector<ReportFormat> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    ReportFormat f;
    if (item == "csv")
      f = ReportFormat::Csv;
    else if (item == "txt")
      f = ReportFormat::Txt;
    else if (item == "svg")
      f = ReportFormat::Svg;
    else
      throw std::invalid_argument("unknown report format '" + item + "' (expected csv, txt or svg)");
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
  }
  return out;
}

std::string metrics_csv(const Report& report) {
  std::string out = "set,trials,p_nav,p_grasp,d_nav,d_grasp,task\n";
  for (const auto& m : report.sets)
    out += m.set + "," + std::to_string(m.trials) + "," + m.p_nav.cell() + "," + m.p_grasp.cell() + "," +
           m.d_nav.cell() + "," + m.d_grasp.cell() + "," + m.task.cell() + "\n";
  return out;
}

std::string timing_csv(const Report& report) {
  std::string out = "process,site,count,mean_s,sd_s\n";
  for (const auto& t : report.timing)
    out += std::string(to_string(t.process)) + "," + to_string(t.site) + "," + std::to_string(t.count) + "," +
           format("%.2f,%.2f", t.mean, t.sd) + "\n";
  return out;
}

std::string summary_text(const Report& report) {
  std::string out = "Success rates\n";
  out += pad("Set", 14) + pad("Trials", 8) + pad("P-Nav", 16) + pad("P-Grasp", 16) + pad("D-Nav", 16) +
         pad("D-Grasp", 16) + "Task\n";
  for (const auto& m : report.sets)
    out += pad(m.set, 14) + pad(std::to_string(m.trials), 8) + pad(m.p_nav.cell(), 16) +
           pad(m.p_grasp.cell(), 16) + pad(m.d_nav.cell(), 16) + pad(m.d_grasp.cell(), 16) + m.task.cell() +
           "\n";

  out += "\nExecution time\n";
  out += pad("Sub-process", 24) + pad("Pick", 22) + "Drop\n";
  auto cell = [&](Process p, Site s) -> std::string {
    for (const auto& t : report.timing)
      if (t.process == p && t.site == s)
        return t.count == 0 ? "-" : format("%.2fs ± %.2fs", t.mean, t.sd);
    return "-";
  };
  for (Process p : kProcesses)
    out += pad(process_title(p), 24) + pad(cell(p, Site::Pick), 22) + cell(p, Site::Drop) + "\n";
  return out;
}

std::string map_svg(const std::vector<PlotTrial>& trials, const OccupancyGrid* grid) {
  double x0, y0, x1, y1;
  if (grid && grid->width > 0 && grid->height > 0) {
    x0 = grid->origin.x();
    y0 = grid->origin.y();
    x1 = x0 + grid->width * grid->resolution;
    y1 = y0 + grid->height * grid->resolution;
  } else {
    x0 = y0 = 1e300;
    x1 = y1 = -1e300;
    auto grow = [&](const Vec2& p) {
      x0 = std::min(x0, p.x());
      y0 = std::min(y0, p.y());
      x1 = std::max(x1, p.x());
      y1 = std::max(y1, p.y());
    };
    for (const auto& t : trials) {
      grow(t.start.position());
      grow(t.pick.position());
      grow(t.drop.position());
      for (const auto& p : t.trajectory) grow(p);
    }
    if (trials.empty()) x0 = y0 = 0.0, x1 = y1 = 1.0;
    x0 -= 1.0, y0 -= 1.0, x1 += 1.0, y1 += 1.0;
  }
  const double span = std::max(x1 - x0, y1 - y0);
  const double scale = 600.0 / span;
  const double w = (x1 - x0) * scale, h = (y1 - y0) * scale;
  auto px = [&](const Vec2& p) {
    return format("%.2f,%.2f", (p.x() - x0) * scale, (y1 - p.y()) * scale);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format("%.0f", w, 0) << "\" height=\""
      << format("%.0f", h, 0) << "\" viewBox=\"0 0 " << format("%.2f %.2f", w, h) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (grid) {
    // One rectangle per horizontal run of occupied cells.
    const double c = grid->resolution * scale;
    svg << "<g fill=\"#555\">\n";
    for (int iy = 0; iy < grid->height; ++iy)
      for (int ix = 0; ix < grid->width;) {
        if (!grid->occupied(ix, iy)) {
          ++ix;
          continue;
        }
        int end = ix;
        while (end < grid->width && grid->occupied(end, iy)) ++end;
        const Vec2 top_left = grid->origin + Vec2(ix, iy + 1) * grid->resolution;
        svg << "<rect x=\"" << format("%.2f", (top_left.x() - x0) * scale, 0) << "\" y=\""
            << format("%.2f", (y1 - top_left.y()) * scale, 0) << "\" width=\"" << format("%.2f", (end - ix) * c, 0)
            << "\" height=\"" << format("%.2f", c, 0) << "\"/>\n";
        ix = end;
      }
    svg << "</g>\n";
  }

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    const char* color = palette[i % std::size(palette)];
    if (t.trajectory.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& p : t.trajectory) svg << px(p) << " ";
      svg << "\"/>\n";
    }
    // Five-pointed star at the pick point.
    const Vec2 pick = t.pick.position();
    svg << "<polygon fill=\"" << color << "\" stroke=\"black\" stroke-width=\"0.5\" points=\"";
    for (int k = 0; k < 10; ++k) {
      const double r = (k % 2 == 0 ? 9.0 : 4.0) / scale;
      const double a = std::numbers::pi / 2 + k * std::numbers::pi / 5;
      svg << px(pick + r * Vec2(std::cos(a), std::sin(a))) << " ";
    }
    svg << "\"/>\n";
    const Vec2 drop = t.drop.position();
    svg << "<circle cx=\"" << format("%.2f", (drop.x() - x0) * scale, 0) << "\" cy=\""
        << format("%.2f", (y1 - drop.y()) * scale, 0) << "\" r=\"6\" fill=\"" << color
        << "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
    const std::string label = std::to_string(i + 1);
    for (const Vec2& p : {pick, drop})
      svg << "<text x=\"" << format("%.2f", (p.x() - x0) * scale + 9, 0) << "\" y=\""
          << format("%.2f", (y1 - p.y()) * scale - 9, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">"
          << label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::string> emit_report(const Report& report, const std::vector<ReportFormat>& formats,
                                     const std::string& dir, const std::map<std::string, OccupancyGrid>& maps) {
  std::vector<std::string> written;
  if (formats.empty()) return written;
  const std::filesystem::path root(dir);
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw std::runtime_error("cannot create " + root.string() + ": " + ec.message());

  auto emit = [&](const std::string& name, const std::string& text) {
    const auto path = root / name;
    write_file(path, text);
    written.push_back(path.string());
  };
  for (ReportFormat f : formats) {
    switch (f) {
      case ReportFormat::Csv:
        emit("metrics.csv", metrics_csv(report));
        emit("timing.csv", timing_csv(report));
        break;
      case ReportFormat::Txt:
        emit("summary.txt", summary_text(report));
        break;
      case ReportFormat::Svg:
        for (const auto& [name, trials] : report.plots) {
          const auto it = maps.find(name);
          emit("map_" + safe_name(name) + ".svg", map_svg(trials, it == maps.end() ? nullptr : &it->second));
        }
        break;
    }
  }
  return written;
}

}  // namespace pickdrop
