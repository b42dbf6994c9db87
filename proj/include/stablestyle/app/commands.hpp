#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stablestyle/io/config.hpp"
#include "stablestyle/io/manifest.hpp"

namespace sst::app {

enum class OptionKind { Int, Float, Bool, String, InputPath, InputPathList, IntList, FloatList, StringList };

struct OptionSpec {
  std::string name;
  OptionKind kind = OptionKind::String;
  std::string default_value;
  std::string help;
  bool required = false;
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<OptionSpec> options;  // always includes "seed"

  const OptionSpec* find(const std::string& option) const;
};

const std::vector<CommandSpec>& command_specs();
const CommandSpec& find_command(const std::string& name);

// Settings resolved against a command's schema: defaults filled in, unknown
// keys rejected, every value parsed once up front, input paths checked.
class Options {
 public:
  Options(const CommandSpec& spec, const io::Config& settings);

  const std::string& str(const std::string& name) const;
  long long integer(const std::string& name) const;
  // Non-negative integer.
  std::size_t count(const std::string& name) const;
  double real(const std::string& name) const;
  bool flag(const std::string& name) const;
  std::filesystem::path path(const std::string& name) const;
  std::vector<std::filesystem::path> paths(const std::string& name) const;
  std::vector<std::size_t> counts(const std::string& name) const;
  std::vector<double> reals(const std::string& name) const;
  std::vector<std::string> strings(const std::string& name) const;

  const std::map<std::string, std::string>& resolved() const { return values_; }
  std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("seed")); }

 private:
  const OptionSpec& spec_of(const std::string& name, OptionKind expected) const;
  const CommandSpec* spec_;
  std::map<std::string, std::string> values_;
};

// Runs one command, writing every artifact and manifest.json under out_dir.
// Validation problems throw InvalidArgument / FormatError / IoError before any
// work starts; failed numeric checks throw NumericError after the outputs and
// the manifest have been written.
io::Manifest run_command(const std::string& name, const io::Config& settings, const std::filesystem::path& out_dir);

}  // namespace sst::app
