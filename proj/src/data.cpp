#include "hpgan/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "hpgan/error.hpp"

namespace hpgan {

std::string_view label_name(Label label) { return label == Label::kNormal ? "normal" : "abnormal"; }

Label parse_label(std::string_view text) {
  if (text == "normal") return Label::kNormal;
  if (text == "abnormal") return Label::kAbnormal;
  throw DataError("unknown label '" + std::string(text) + "'");
}

void Sample::validate() const {
  for (std::size_t h = 0; h < 24; ++h) {
    for (std::size_t c = 0; c < 2; ++c) {
      const double v = values[h][c];
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream os;
        os << "sample '" << id << "' hour " << h << ": invalid reading " << v;
        throw DataError(os.str());
      }
    }
  }
}

Tensor to_tensor(const Sample& s) {
  std::vector<double> v(48);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t h = 0; h < 24; ++h) v[c * 24 + h] = s.values[h][c];
  return Tensor({2, 24}, std::move(v));
}

Tensor to_batch(std::span<const Sample* const> samples) {
  std::vector<double> v(samples.size() * 48);
  for (std::size_t b = 0; b < samples.size(); ++b)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t h = 0; h < 24; ++h) v[b * 48 + c * 24 + h] = samples[b]->values[h][c];
  return Tensor({samples.size(), 2, 24}, std::move(v));
}

Tensor to_batch(std::span<const Sample> samples) {
  std::vector<const Sample*> ptrs;
  ptrs.reserve(samples.size());
  for (const Sample& s : samples) ptrs.push_back(&s);
  return to_batch(std::span<const Sample* const>(ptrs));
}

std::size_t Dataset::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const Sample& s) { return s.label == label; }));
}

void Dataset::validate() const {
  std::set<std::string> ids;
  for (const Sample& s : samples) {
    if (!ids.insert(s.id).second) throw DataError("duplicate sample id '" + s.id + "'");
    s.validate();
  }
}

// CSV -------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_number(const std::string& text, std::size_t line_no) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw DataError("line " + std::to_string(line_no) + ": malformed number '" + text + "'");
  }
  return v;
}

}  // namespace

Dataset read_csv(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::array<bool, 24>> seen;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    for (auto& f : fields) f = trim(f);
    if (!header_seen) {
      const std::vector<std::string> expected{"sample_id", "hour", "pm25", "pm10", "label"};
      if (fields != expected) {
        throw DataError("line 1: expected header 'sample_id,hour,pm25,pm10,label'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 5) {
      throw DataError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                      std::to_string(fields.size()));
    }
    const std::string& id = fields[0];
    if (id.empty()) throw DataError("line " + std::to_string(line_no) + ": empty sample_id");
    const double hour_value = parse_number(fields[1], line_no);
    if (hour_value < 0 || hour_value > 23 || hour_value != std::floor(hour_value)) {
      throw DataError("line " + std::to_string(line_no) + ": hour must be an integer in 0..23");
    }
    const auto hour = static_cast<std::size_t>(hour_value);
    const double pm25 = parse_number(fields[2], line_no);
    const double pm10 = parse_number(fields[3], line_no);
    if (!(pm25 >= 0.0) || !(pm10 >= 0.0) || !std::isfinite(pm25) || !std::isfinite(pm10)) {
      throw DataError("line " + std::to_string(line_no) + ": negative or non-finite reading in sample '" +
                      id + "'");
    }
    Label label;
    try {
      label = parse_label(fields[4]);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }

    auto [it, inserted] = index.try_emplace(id, ds.samples.size());
    if (inserted) {
      Sample s;
      s.id = id;
      s.label = label;
      ds.samples.push_back(std::move(s));
      seen.emplace_back();
    }
    Sample& s = ds.samples[it->second];
    if (s.label != label) {
      throw DataError("line " + std::to_string(line_no) + ": sample '" + id + "' has conflicting labels");
    }
    if (seen[it->second][hour]) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate hour " + std::to_string(hour) +
                      " for sample '" + id + "'");
    }
    seen[it->second][hour] = true;
    s.values[hour] = {pm25, pm10};
  }

  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto missing = static_cast<std::size_t>(std::count(seen[i].begin(), seen[i].end(), false));
    if (missing) {
      throw DataError("sample '" + ds.samples[i].id + "' is missing " + std::to_string(missing) + " of 24 hours");
    }
  }
  return ds;
}

void write_csv(const Dataset& dataset, std::ostream& out) {
  out << "sample_id,hour,pm25,pm10,label\n";
  out << std::fixed << std::setprecision(6);
  for (const Sample& s : dataset.samples) {
    for (std::size_t h = 0; h < 24; ++h) {
      out << s.id << ',' << h << ',' << s.values[h][kPm25] << ',' << s.values[h][kPm10] << ','
          << label_name(s.label) << '\n';
    }
  }
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in);
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_csv(dataset, out);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

nlohmann::json to_json(const Dataset& dataset) {
  nlohmann::json samples = nlohmann::json::array();
  for (const Sample& s : dataset.samples) {
    std::vector<double> pm25(24), pm10(24);
    for (std::size_t h = 0; h < 24; ++h) {
      pm25[h] = s.values[h][kPm25];
      pm10[h] = s.values[h][kPm10];
    }
    samples.push_back({{"sample_id", s.id}, {"label", label_name(s.label)}, {"pm25", pm25}, {"pm10", pm10}});
  }
  nlohmann::json j{{"samples", samples}};
  if (dataset.normalization) j["normalization"] = to_json(*dataset.normalization);
  return j;
}

Dataset dataset_from_json(const nlohmann::json& j) {
  Dataset ds;
  try {
    for (const auto& item : j.at("samples")) {
      Sample s;
      s.id = item.at("sample_id").get<std::string>();
      s.label = parse_label(item.at("label").get<std::string>());
      const auto pm25 = item.at("pm25").get<std::vector<double>>();
      const auto pm10 = item.at("pm10").get<std::vector<double>>();
      if (pm25.size() != 24 || pm10.size() != 24) {
        throw DataError("sample '" + s.id + "' must have 24 readings per channel");
      }
      for (std::size_t h = 0; h < 24; ++h) s.values[h] = {pm25[h], pm10[h]};
      ds.samples.push_back(std::move(s));
    }
    if (j.contains("normalization")) ds.normalization = norm_stats_from_json(j.at("normalization"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dataset JSON: ") + e.what());
  }
  ds.validate();
  return ds;
}

// Normalisation -----------------------------------------------------------------

NormStats fit_norm(std::span<const Sample> train_normals) {
  if (train_normals.empty()) throw DataError("fit_norm: no training samples");
  NormStats st;
  for (std::size_t c = 0; c < 2; ++c) {
    st.min[c] = train_normals.front().values[0][c];
    st.max[c] = st.min[c];
  }
  for (const Sample& s : train_normals) {
    for (const auto& row : s.values) {
      for (std::size_t c = 0; c < 2; ++c) {
        st.min[c] = std::min(st.min[c], row[c]);
        st.max[c] = std::max(st.max[c], row[c]);
      }
    }
  }
  for (std::size_t c = 0; c < 2; ++c) {
    if (!(st.max[c] > st.min[c])) {
      throw DataError(std::string("fit_norm: channel ") + (c == kPm25 ? "pm25" : "pm10") + " is constant");
    }
  }
  return st;
}

Sample normalize(const Sample& s, const NormStats& st) {
  Sample out = s;
  for (auto& row : out.values)
    for (std::size_t c = 0; c < 2; ++c) row[c] = std::clamp((row[c] - st.min[c]) / (st.max[c] - st.min[c]), 0.0, 1.0);
  return out;
}

Dataset normalize(const Dataset& dataset, const NormStats& st) {
  Dataset out;
  out.samples.reserve(dataset.samples.size());
  for (const Sample& s : dataset.samples) out.samples.push_back(normalize(s, st));
  out.normalization = st;
  return out;
}

Sample denormalize(const Sample& s, const NormStats& st) {
  Sample out = s;
  for (auto& row : out.values)
    for (std::size_t c = 0; c < 2; ++c) row[c] = st.min[c] + row[c] * (st.max[c] - st.min[c]);
  return out;
}

nlohmann::json to_json(const NormStats& st) {
  return {{"pm25", {{"min", st.min[kPm25]}, {"max", st.max[kPm25]}}},
          {"pm10", {{"min", st.min[kPm10]}, {"max", st.max[kPm10]}}}};
}

NormStats norm_stats_from_json(const nlohmann::json& j) {
  NormStats st;
  try {
    st.min[kPm25] = j.at("pm25").at("min").get<double>();
    st.max[kPm25] = j.at("pm25").at("max").get<double>();
    st.min[kPm10] = j.at("pm10").at("min").get<double>();
    st.max[kPm10] = j.at("pm10").at("max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed normalisation stats: ") + e.what());
  }
  for (std::size_t c = 0; c < 2; ++c)
    if (!(st.max[c] > st.min[c])) throw DataError("normalisation stats: max must exceed min");
  return st;
}

}  // namespace hpgan
