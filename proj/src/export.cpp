#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "platoon/scenario.hpp"

namespace platoon {

namespace {

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string fmt6(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

std::ofstream openOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractViolation("cannot open output file '" + path.string() + "'");
  return out;
}

// ---- SVG line charts ------------------------------------------------------

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool steps = false;  // render as a staircase
};

void writeSvgChart(const std::filesystem::path& path, const std::string& title,
                   const std::string& xLabel, const std::string& yLabel,
                   const std::vector<Series>& series) {
  const double width = 960, height = 540;
  const double left = 70, right = 930, top = 50, bottom = 480;

  double xMin = 0, xMax = 1, yMin = 0, yMax = 1;
  bool any = false;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        xMin = xMax = s.x[i];
        yMin = yMax = s.y[i];
        any = true;
      } else {
        xMin = std::min(xMin, s.x[i]);
        xMax = std::max(xMax, s.x[i]);
        yMin = std::min(yMin, s.y[i]);
        yMax = std::max(yMax, s.y[i]);
      }
    }
  }
  if (xMax == xMin) xMax = xMin + 1;
  if (yMax == yMin) {
    yMax = yMin + 1;
    yMin -= 1;
  } else {
    const double pad = 0.05 * (yMax - yMin);
    yMin -= pad;
    yMax += pad;
  }

  const auto px = [&](double x) { return left + (x - xMin) / (xMax - xMin) * (right - left); };
  const auto py = [&](double y) { return bottom - (y - yMin) / (yMax - yMin) * (bottom - top); };

  std::ofstream out = openOut(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << (width / 2) << "\" y=\"28\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"18\">" << title << "</text>\n";

  // axes and ticks
  out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
      << bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << bottom << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xMin + (xMax - xMin) * k / 5.0;
    const double yv = yMin + (yMax - yMin) * k / 5.0;
    out << "<line x1=\"" << px(xv) << "\" y1=\"" << bottom << "\" x2=\"" << px(xv)
        << "\" y2=\"" << (bottom + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(xv) << "\" y=\"" << (bottom + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << fmt6(xv)
        << "</text>\n";
    out << "<line x1=\"" << (left - 5) << "\" y1=\"" << py(yv) << "\" x2=\"" << left
        << "\" y2=\"" << py(yv) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (left - 8) << "\" y=\"" << (py(yv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << fmt6(yv)
        << "</text>\n";
  }
  out << "<text x=\"" << ((left + right) / 2) << "\" y=\"" << (height - 8)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << xLabel
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << ((top + bottom) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
      << "transform=\"rotate(-90 18 " << ((top + bottom) / 2) << ")\">" << yLabel
      << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    if (ser.x.empty()) continue;
    const char* color = kPalette[s % kPaletteSize];
    const std::size_t stride = std::max<std::size_t>(1, ser.x.size() / 2400);
    std::ostringstream pts;
    double lastY = ser.y.front();
    for (std::size_t i = 0; i < ser.x.size(); i += stride) {
      if (ser.steps && i > 0) {
        pts << fmt6(px(ser.x[i])) << "," << fmt6(py(lastY)) << " ";
      }
      pts << fmt6(px(ser.x[i])) << "," << fmt6(py(ser.y[i])) << " ";
      lastY = ser.y[i];
    }
    if ((ser.x.size() - 1) % stride != 0) {
      if (ser.steps) pts << fmt6(px(ser.x.back())) << "," << fmt6(py(lastY)) << " ";
      pts << fmt6(px(ser.x.back())) << "," << fmt6(py(ser.y.back()));
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << pts.str() << "\"/>\n";
    const double ly = top + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << (right - 150) << "\" y1=\"" << ly << "\" x2=\"" << (right - 125)
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << (right - 120) << "\" y=\"" << (ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << ser.name << "</text>\n";
  }
  out << "</svg>\n";
}

void renderCharts(const std::vector<double>& times, const std::vector<std::vector<double>>& pos,
                  const std::vector<std::vector<double>>& vel,
                  const std::vector<double>& phaseIdx,
                  const std::vector<std::string>& phaseIds,
                  const std::filesystem::path& dir) {
  const int n = static_cast<int>(pos.size());
  std::vector<Series> positions, velocities;
  for (int i = 0; i < n; ++i) {
    positions.push_back({"vehicle " + std::to_string(i + 1), times, pos[static_cast<std::size_t>(i)]});
    velocities.push_back({"vehicle " + std::to_string(i + 1), times, vel[static_cast<std::size_t>(i)]});
  }
  writeSvgChart(dir / "positions.svg", "Vehicle positions", "t [s]", "position [m]", positions);
  writeSvgChart(dir / "velocities.svg", "Vehicle velocities", "t [s]", "velocity [m/s]",
                velocities);

  std::vector<Series> switching;
  Series sig{"active phase", times, phaseIdx, true};
  switching.push_back(sig);
  std::string title = "Switching signal";
  if (!phaseIds.empty()) {
    title += " (";
    for (std::size_t i = 0; i < phaseIds.size(); ++i) {
      if (i > 0) title += ", ";
      title += std::to_string(i) + "=" + phaseIds[i];
    }
    title += ")";
  }
  writeSvgChart(dir / "switching.svg", title, "t [s]", "phase index", switching);
}

}  // namespace

void exportTrace(const ScenarioTrace& trace, const std::string& dirName) {
  const std::filesystem::path dir(dirName);
  std::filesystem::create_directories(dir);
  const int n = trace.n;

  {
    std::ofstream out = openOut(dir / "trace.csv");
    out << "t";
    for (int i = 1; i <= n; ++i) {
      out << ",s_" << i << ",zeta_" << i << ",shat_" << i << ",zetahat_" << i << ",u_" << i;
    }
    out << ",topology_phase_id";
    for (int i = 1; i <= n; ++i) out << ",tau_hat_" << i;
    out << "\n";
    for (const auto& rec : trace.records) {
      out << fmt(rec.t);
      for (int i = 0; i < n; ++i) {
        out << "," << fmt(rec.positions(i)) << "," << fmt(rec.velocities(i)) << ","
            << fmt(rec.errPositions(i)) << "," << fmt(rec.errVelocities(i)) << ","
            << fmt(rec.controls(i));
      }
      out << "," << trace.phaseIds.at(static_cast<std::size_t>(rec.phaseIndex));
      for (int i = 0; i < n; ++i) out << "," << fmt(rec.tauHat(i));
      out << "\n";
    }
  }

  {
    std::ofstream out = openOut(dir / "events.csv");
    out << "t,vehicle,event,tau_hat\n";
    for (const auto& ev : trace.events) {
      out << fmt(ev.t) << "," << (ev.vehicle + 1) << "," << eventTypeName(ev.type) << ","
          << fmt(ev.tauHat) << "\n";
    }
  }

  {
    std::ofstream out = openOut(dir / "switches.csv");
    out << "t,from_phase,to_phase,reason\n";
    for (const auto& sw : trace.switches) {
      out << fmt(sw.t) << "," << sw.fromPhase << "," << sw.toPhase << "," << switchReasonName(sw.reason)
          << "\n";
    }
  }

  {
    nlohmann::ordered_json j;
    j["vehicles"] = n;
    j["time_step"] = trace.h;
    const auto& s = trace.summary;
    nlohmann::ordered_json det;
    det["detected"] = s.detectionTime.has_value();
    if (s.detectionTime) {
      det["time"] = *s.detectionTime;
      det["vehicle"] = *s.detectedVehicle + 1;
    }
    if (s.firstMeasurementTime) {
      det["first_measurement_time"] = *s.firstMeasurementTime;
      det["first_measured_delay"] = *s.firstMeasuredDelay;
    }
    j["detection"] = det;
    nlohmann::ordered_json resp;
    resp["branch"] = s.responseBranch;
    if (s.activationTime) resp["activation_time"] = *s.activationTime;
    if (s.newLeader) resp["new_leader"] = *s.newLeader + 1;
    if (s.recoveredTime) resp["recovered_time"] = *s.recoveredTime;
    if (s.stoppedTime) resp["stopped_time"] = *s.stoppedTime;
    if (s.victimFinalSpeed) resp["victim_final_speed"] = *s.victimFinalSpeed;
    j["response"] = resp;
    nlohmann::ordered_json fin;
    fin["max_spacing_error"] = s.finalMaxSpacingError;
    fin["max_velocity_error"] = s.finalMaxVelocityError;
    fin["max_spacing_error_followers"] = s.finalMaxSpacingErrorFollowers;
    fin["max_velocity_error_followers"] = s.finalMaxVelocityErrorFollowers;
    j["final_errors"] = fin;
    nlohmann::ordered_json sw;
    sw["count"] = trace.switches.size();
    sw["dwell_time_law_holds"] = s.mdadtHolds;
    j["switching"] = sw;
    nlohmann::ordered_json stab;
    stab["attempted"] = s.stabilityAttempted;
    if (s.stabilityAttempted) {
      stab["certificate_found"] = s.stabilityFeasible;
      stab["margin"] = s.stabilityMargin;
    }
    j["stability"] = stab;

    std::ofstream out = openOut(dir / "summary.json");
    out << j.dump(2) << "\n";
  }

  {
    std::vector<double> times;
    std::vector<std::vector<double>> pos(static_cast<std::size_t>(n)),
        vel(static_cast<std::size_t>(n));
    std::vector<double> phase;
    times.reserve(trace.records.size());
    for (const auto& rec : trace.records) {
      times.push_back(rec.t);
      for (int i = 0; i < n; ++i) {
        pos[static_cast<std::size_t>(i)].push_back(rec.positions(i));
        vel[static_cast<std::size_t>(i)].push_back(rec.velocities(i));
      }
      phase.push_back(rec.phaseIndex);
    }
    renderCharts(times, pos, vel, phase, trace.phaseIds, dir);
  }
}

void renderChartsFromCsv(const std::string& traceCsvPath, const std::string& dirName) {
  std::ifstream in(traceCsvPath);
  if (!in) throw ValidationError("cannot open trace file '" + traceCsvPath + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("trace file is empty");

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::vector<int> posCols, velCols;
  int tCol = -1, phaseCol = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "t") tCol = static_cast<int>(c);
    if (header[c] == "topology_phase_id") phaseCol = static_cast<int>(c);
    if (header[c].rfind("s_", 0) == 0 && header[c].find("hat") == std::string::npos) {
      posCols.push_back(static_cast<int>(c));
    }
    if (header[c].rfind("zeta_", 0) == 0 && header[c].find("hat") == std::string::npos) {
      velCols.push_back(static_cast<int>(c));
    }
  }
  if (tCol < 0 || posCols.empty() || velCols.empty() || phaseCol < 0) {
    throw ValidationError("trace file misses the expected columns (t, s_*, zeta_*, "
                          "topology_phase_id)");
  }

  std::vector<double> times;
  std::vector<std::vector<double>> pos(posCols.size()), vel(velCols.size());
  std::vector<double> phase;
  std::vector<std::string> phaseIds;
  std::map<std::string, int> phaseIndex;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      throw ValidationError("trace file row has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(header.size()));
    }
    times.push_back(std::stod(cells[static_cast<std::size_t>(tCol)]));
    for (std::size_t i = 0; i < posCols.size(); ++i) {
      pos[i].push_back(std::stod(cells[static_cast<std::size_t>(posCols[i])]));
    }
    for (std::size_t i = 0; i < velCols.size(); ++i) {
      vel[i].push_back(std::stod(cells[static_cast<std::size_t>(velCols[i])]));
    }
    const std::string& id = cells[static_cast<std::size_t>(phaseCol)];
    auto [it, inserted] = phaseIndex.try_emplace(id, static_cast<int>(phaseIds.size()));
    if (inserted) phaseIds.push_back(id);
    phase.push_back(it->second);
  }

  const std::filesystem::path dir(dirName);
  std::filesystem::create_directories(dir);
  renderCharts(times, pos, vel, phase, phaseIds, dir);
}

}  // namespace platoon
