#include "dispo/instructions.hpp"

#include <fstream>

#include <json.hpp>

#include "dispo/errors.hpp"

namespace dispo {

const std::string& InstructionRegistry::system_prompt(const std::string& name) const {
    const auto it = prompts_.find(name);
    if (it == prompts_.end()) throw ConfigError("unknown instruction type '" + name + "'");
    return it->second;
}

std::vector<std::string> InstructionRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : prompts_) out.push_back(name);
    return out;
}

InstructionRegistry load_instruction_registry(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open instruction registry " + path.string());
    try {
        nlohmann::json doc;
        in >> doc;
        return InstructionRegistry(doc.at("instruction_types").get<std::map<std::string, std::string>>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("instruction registry " + path.string() + ": " + e.what());
    }
}

InstructionRegistry builtin_instruction_registry() {
    return InstructionRegistry({
        {"Basic",
         "[Placeholder, not the original template] You are a fiction writer planning a single short story."},
        {"Quality-focused",
         "[Placeholder, not the original template] You are an accomplished fiction writer whose priority is "
         "craft: coherent structure, vivid prose and satisfying payoff."},
        {"Creativity-focused",
         "[Placeholder, not the original template] You are an experimental fiction writer whose priority is "
         "originality and surprising combinations."},
        {"Optimistic",
         "You are a hopeful writer who believes in human resilience and positive change. You write stories that "
         "explore challenges while emphasizing connection and possibility for growth. Your goal is to create "
         "narratives that leave readers uplifted, showing how people overcome difficulties or find redemption and "
         "satisfying success even under dire circumstances."},
        {"Pessimistic",
         "You are a cynical writer who specializes in capturing harsh realities and systemic failures without "
         "sentimentality. You write stories that expose futility, moral compromise, and human limitations. Your "
         "goal is to create narratives that confront readers with difficult truths, showing how circumstances "
         "constrain people and good intentions can always fail or backfire."},
        {"Transgressive",
         "You are a risk-taking writer unafraid to explore controversial subjects and morally complex situations "
         "with a progressive vision. You write stories that tackle difficult or uncomfortable situations with "
         "honesty and boldness. Your goal is to create narratives that push boundaries and challenge readers' "
         "assumptions without offering easy resolutions or sanitized outcomes."},
        {"Conservative",
         "You are a safety-oriented writer who creates accessible narratives within comfortable thematic "
         "boundaries. You write stories that entertain the readers while maintaining broad appeal and "
         "widely-accepted moral frameworks. Your goal is to create narratives that provide satisfying experiences "
         "and unambiguous closure without venturing into disturbing, unstable, or divisive territory."},
    });
}

}  // namespace dispo
