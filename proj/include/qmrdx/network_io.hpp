#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qmrdx/network.hpp"

namespace qmrdx {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Native: explicit priors, diseases/findings/edges arrays.
/// Symcat: `{disease: [[finding, prob], ...]}` with implied uniform priors.
enum class NetworkFormat { Native, Symcat, Auto };

NetworkFormat parse_network_format(std::string_view name);

QmrNetwork parse_network(std::string_view text, NetworkFormat format = NetworkFormat::Auto);
QmrNetwork load_network(const std::filesystem::path& path,
                        NetworkFormat format = NetworkFormat::Auto);

/// Native JSON with ids in network order. Output is stable for a given network.
std::string to_native_json(const QmrNetwork& net, int indent = 1);
void save_network(const std::filesystem::path& path, const QmrNetwork& net);

using FindingStates = std::vector<std::pair<std::string, bool>>;

/// One summarised consultation: findings the patient volunteered (explicit)
/// and findings elicited by the doctor's questions (implicit).
struct DialogueCase {
  std::string disease;
  FindingStates explicit_findings;
  FindingStates implicit_findings;
};

std::vector<DialogueCase> parse_dialogue_cases(std::string_view text);
std::vector<DialogueCase> load_dialogue_cases(const std::filesystem::path& path);
std::string to_dialogue_json(const std::vector<DialogueCase>& cases);

enum class PriorMode { Uniform, Empirical };

PriorMode parse_prior_mode(std::string_view name);

struct BuiltNetwork {
  QmrNetwork network;
  std::vector<std::string> warnings;
};

/// Estimates edge probabilities as the fraction of a disease's cases in which
/// the finding was recorded positive. Zero estimates produce no edge.
BuiltNetwork build_network_from_cases(const std::vector<DialogueCase>& cases, PriorMode mode);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace qmrdx
