#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dispo {

/// Instruction type name -> system prompt text.
class InstructionRegistry {
public:
    InstructionRegistry() = default;
    explicit InstructionRegistry(std::map<std::string, std::string> prompts) : prompts_(std::move(prompts)) {}

    [[nodiscard]] bool contains(const std::string& name) const { return prompts_.count(name) != 0; }
    /// Throws ConfigError for unknown names.
    [[nodiscard]] const std::string& system_prompt(const std::string& name) const;
    [[nodiscard]] std::vector<std::string> names() const;

private:
    std::map<std::string, std::string> prompts_;
};

/// Registry file: {"instruction_types": {"<name>": "<system prompt>", ...}}.
InstructionRegistry load_instruction_registry(const std::filesystem::path& path);

/// Basic / Quality-focused / Creativity-focused placeholders plus the
/// Optimistic, Pessimistic, Transgressive and Conservative stances.
InstructionRegistry builtin_instruction_registry();

}  // namespace dispo
