#include "aot/model_io.hpp"

#include <fstream>
#include <sstream>

namespace aot {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorKind::InvalidModel, message); }

const json& field(const json& doc, const char* name) {
  if (!doc.contains(name)) invalid(std::string(name) + ": missing field");
  return doc.at(name);
}

std::size_t positive_size(const json& doc, const char* name) {
  const json& v = field(doc, name);
  if (!v.is_number_integer() || v.get<long long>() < 1) invalid(std::string(name) + ": must be a positive integer");
  return v.get<std::size_t>();
}

void read_vector(const json& v, std::size_t n, const std::string& where, std::vector<double>& out) {
  if (!v.is_array() || v.size() != n) invalid(where + ": expected array of length " + std::to_string(n));
  for (const json& e : v) {
    if (!e.is_number()) invalid(where + ": non-numeric entry");
    out.push_back(e.get<double>());
  }
}

}  // namespace

json to_json(const TabularPomdp& m) {
  json transition = json::array();
  for (std::size_t a = 0; a < m.num_actions; ++a) {
    json block = json::array();
    for (std::size_t x = 0; x < m.num_states; ++x) {
      const auto row = m.transition_row(a, x);
      block.push_back(std::vector<double>(row.begin(), row.end()));
    }
    transition.push_back(std::move(block));
  }
  json observation = json::array();
  for (std::size_t x = 0; x < m.num_states; ++x) {
    const auto row = m.observation_row(x);
    observation.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json reward = json::array();
  for (std::size_t x = 0; x < m.num_states; ++x) {
    reward.push_back(std::vector<double>(m.reward.begin() + static_cast<std::ptrdiff_t>(x * m.num_actions),
                                         m.reward.begin() + static_cast<std::ptrdiff_t>((x + 1) * m.num_actions)));
  }
  return json{{"num_states", m.num_states},
              {"num_actions", m.num_actions},
              {"num_observations", m.num_observations},
              {"transition", std::move(transition)},
              {"observation", std::move(observation)},
              {"reward", std::move(reward)},
              {"r_max", m.r_max},
              {"initial_belief", m.initial_belief},
              {"horizon", m.horizon}};
}

TabularPomdp tabular_from_json(const json& doc) {
  if (!doc.is_object()) invalid("document: expected a JSON object");
  TabularPomdp m;
  m.num_states = positive_size(doc, "num_states");
  m.num_actions = positive_size(doc, "num_actions");
  m.num_observations = positive_size(doc, "num_observations");
  m.horizon = positive_size(doc, "horizon");

  const json& t = field(doc, "transition");
  if (!t.is_array() || t.size() != m.num_actions) invalid("transition: expected num_actions blocks");
  m.transition.reserve(m.num_actions * m.num_states * m.num_states);
  for (std::size_t a = 0; a < m.num_actions; ++a) {
    const json& block = t[a];
    if (!block.is_array() || block.size() != m.num_states) {
      invalid("transition[" + std::to_string(a) + "]: expected num_states rows");
    }
    for (std::size_t x = 0; x < m.num_states; ++x) {
      read_vector(block[x], m.num_states, "transition[" + std::to_string(a) + "][" + std::to_string(x) + "]",
                  m.transition);
    }
  }
  const json& o = field(doc, "observation");
  if (!o.is_array() || o.size() != m.num_states) invalid("observation: expected num_states rows");
  for (std::size_t x = 0; x < m.num_states; ++x) {
    read_vector(o[x], m.num_observations, "observation[" + std::to_string(x) + "]", m.observation);
  }
  const json& r = field(doc, "reward");
  if (!r.is_array() || r.size() != m.num_states) invalid("reward: expected num_states rows");
  for (std::size_t x = 0; x < m.num_states; ++x) {
    read_vector(r[x], m.num_actions, "reward[" + std::to_string(x) + "]", m.reward);
  }
  const json& rmax = field(doc, "r_max");
  if (!rmax.is_number()) invalid("r_max: must be a number");
  m.r_max = rmax.get<double>();
  read_vector(field(doc, "initial_belief"), m.num_states, "initial_belief", m.initial_belief);
  m.validate();
  return m;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

TabularPomdp load_tabular(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidModel, "document: " + std::string(e.what()));
  }
  return tabular_from_json(doc);
}

void save_tabular(const TabularPomdp& model, const std::filesystem::path& path) {
  write_text_file(path, to_json(model).dump() + "\n");
}

}  // namespace aot
