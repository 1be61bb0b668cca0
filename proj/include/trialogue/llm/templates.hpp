#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace trialogue::llm {

// Named prompt templates. Defaults are compiled in from the repository's
// templates/ directory; any `<name>.txt` in an override directory replaces
// the default of the same name.
class TemplateSet {
public:
    static TemplateSet defaults();
    static TemplateSet load(const std::filesystem::path& override_dir);

    const std::string& get(std::string_view name) const;
    void set(std::string name, std::string text);
    bool contains(std::string_view name) const;

    const std::map<std::string, std::string, std::less<>>& all() const { return templates_; }

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace trialogue::llm
