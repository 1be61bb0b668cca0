#include "trialogue/llm/templates.hpp"

#include <fstream>
#include <sstream>

#include "default_templates.hpp"
#include "trialogue/errors.hpp"

namespace trialogue::llm {

TemplateSet TemplateSet::defaults() {
    TemplateSet set;
    for (const auto& [name, text] : detail::embedded_templates()) set.set(std::string(name), std::string(text));
    return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& override_dir) {
    auto set = defaults();
    if (override_dir.empty()) return set;
    if (!std::filesystem::is_directory(override_dir))
        throw PreconditionError("template directory not found: " + override_dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(override_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path());
        std::ostringstream body;
        body << in.rdbuf();
        set.set(entry.path().stem().string(), body.str());
    }
    return set;
}

const std::string& TemplateSet::get(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw PreconditionError("unknown prompt template '" + std::string(name) + "'");
    return it->second;
}

void TemplateSet::set(std::string name, std::string text) { templates_[std::move(name)] = std::move(text); }

bool TemplateSet::contains(std::string_view name) const { return templates_.find(name) != templates_.end(); }

}  // namespace trialogue::llm
