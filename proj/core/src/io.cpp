#include "pmcmc/io.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "pmcmc/errors.hpp"
#include "pmcmc/instrumentation.hpp"

namespace pmcmc {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t k = 0;
  while (k < s.size() && (s[k] == ' ' || s[k] == '\t')) ++k;
  return s.substr(k);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(path.string(), "cannot open for writing");
  return out;
}

}  // namespace

std::string csv_number(double value) { return format_double(value); }

void write_observations(std::ostream& out, const ObservationSeries& series) {
  out << "time";
  for (const auto& f : series.fields()) out << ',' << f;
  out << '\n';
  for (std::size_t j = 0; j < series.size(); ++j) {
    out << series.time(j);
    for (double v : series.record(j)) out << ',' << csv_number(v);
    out << '\n';
  }
}

ObservationSeries read_observations(std::istream& in, std::string_view source) {
  const std::string src(source);
  auto where = [&](std::size_t line) { return src + ":" + std::to_string(line); };
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw ConfigError(src, "empty observation file");
  for (auto& h : header) h = trim(h);
  if (header.front() != "time") throw ConfigError(where(line_no), "first column must be 'time'");
  if (header.size() < 2) throw ConfigError(where(line_no), "no observation fields");
  std::vector<std::string> fields(header.begin() + 1, header.end());

  std::vector<ModelTime> times;
  std::vector<std::vector<double>> records;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ConfigError(where(line_no), "expected " + std::to_string(header.size()) +
                                            " columns, found " + std::to_string(cells.size()));
    }
    double t = 0.0;
    try {
      t = parse_double(trim(cells[0]));
    } catch (const PreconditionError&) {
      throw ConfigError(where(line_no) + ":time", "not a number: '" + cells[0] + "'");
    }
    if (std::floor(t) != t || std::abs(t) > 9e15) {
      throw ConfigError(where(line_no) + ":time", "time must be an integer");
    }
    if (!times.empty() && static_cast<ModelTime>(t) <= times.back()) {
      throw ConfigError(where(line_no) + ":time", "times must strictly increase");
    }
    std::vector<double> record;
    for (std::size_t k = 1; k < cells.size(); ++k) {
      try {
        const double v = parse_double(trim(cells[k]));
        if (!std::isfinite(v)) throw PreconditionError("non-finite");
        record.push_back(v);
      } catch (const PreconditionError&) {
        throw ConfigError(where(line_no) + ":" + header[k], "not a finite number: '" + cells[k] + "'");
      }
    }
    times.push_back(static_cast<ModelTime>(t));
    records.push_back(std::move(record));
  }
  if (times.empty()) throw ConfigError(src, "no observation rows");
  return ObservationSeries(std::move(fields), std::move(times), std::move(records));
}

void save_observations(const std::filesystem::path& path, const ObservationSeries& series) {
  auto out = open_output(path);
  write_observations(out, series);
  out.flush();
  if (!out) throw ConfigError(path.string(), "write failed");
}

ObservationSeries load_observations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open observation file");
  return read_observations(in, path.string());
}

ChainWriter::ChainWriter(const std::filesystem::path& dir,
                         const std::vector<std::string>& parameter_names)
    : names_(parameter_names) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError(dir.string(), "cannot create output directory: " + ec.message());
  chain_ = open_output(dir / "chain.csv");
  diagnostics_ = open_output(dir / "diagnostics.csv");
  summary_ = open_output(dir / "summary.csv");
  stages_ = open_output(dir / "stages.csv");

  chain_ << "sample";
  for (const auto& n : names_) chain_ << ",theta_" << n;
  chain_ << ",log_likelihood,log_std,log_prior,accepted\n";
  diagnostics_ << "sample,observation,redraw_rate,move_fraction,copy_fraction,stage,worker,duration\n";
  summary_ << "sample,accepted,rolling_acceptance,efficiency,wall_seconds,degenerate_observation\n";
  stages_ << "sample,stage,count,mean,p10,p90\n";
}

void ChainWriter::write(const ChainRecord& r) {
  chain_ << r.sample_index;
  for (const auto& n : names_) chain_ << ',' << csv_number(r.theta.at(n));
  chain_ << ',' << csv_number(r.log_likelihood) << ',' << csv_number(r.log_std) << ','
         << csv_number(r.log_prior) << ',' << (r.accepted ? 1 : 0) << '\n';

  for (const auto& e : r.events) {
    diagnostics_ << e.sample_index << ',' << e.observation_index << ','
                 << csv_number(e.redraw_rate) << ',' << csv_number(e.move_fraction) << ','
                 << csv_number(e.copy_fraction) << ",,,\n";
  }
  for (const auto& t : r.timings) {
    diagnostics_ << t.sample_index << ',' << t.observation_index << ",,,," << stage_name(t.stage)
                 << ',' << t.worker << ',' << csv_number(t.duration) << '\n';
  }

  double efficiency = std::numeric_limits<double>::quiet_NaN();
  for (const auto& e : compute_efficiency(r.timings)) {
    if (e.sample_index == r.sample_index) efficiency = e.efficiency;
  }
  summary_ << r.sample_index << ',' << (r.accepted ? 1 : 0) << ','
           << (std::isnan(r.rolling_acceptance) ? std::string() : csv_number(r.rolling_acceptance))
           << ',' << (std::isnan(efficiency) ? std::string() : csv_number(efficiency)) << ','
           << csv_number(r.wall_seconds) << ','
           << (r.degenerate_row ? std::to_string(*r.degenerate_row + 1) : std::string()) << '\n';

  if (!r.timings.empty()) {
    for (const auto& s : aggregate_timings(r.timings)) {
      stages_ << s.sample_index << ',' << stage_name(s.stage) << ',' << s.count << ','
              << csv_number(s.mean) << ',' << csv_number(s.p10) << ',' << csv_number(s.p90)
              << '\n';
    }
  }
}

void ChainWriter::flush() {
  for (std::ofstream* f : {&chain_, &diagnostics_, &summary_, &stages_}) {
    f->flush();
    if (!*f) throw Error("output write failed");
  }
}

}  // namespace pmcmc
