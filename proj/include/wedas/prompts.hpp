#pragma once

#include <string_view>

// Versioned prompt texts. Every _v1 string is frozen: scripted fixtures and
// cached fingerprints depend on these bytes, so any edit must ship as a new
// version. The judge and generator prompts are also installed as text assets
// (assets/*.txt); a test keeps the embedded copies in sync with the files.
namespace wedas::prompts {

// System instruction for the relevance judge that scores (query, results) batches.
std::string_view judge_system_v1();

// JSON schema describing the judge's output contract, shipped alongside the prompt.
std::string_view judge_schema_json_v1();

// System instruction for the probe-query generator.
std::string_view generator_system_v1();

// Minimal built-in role prompts for the task planner, the acting agent, the
// trajectory summarizer, and the final-answer synthesizer.
std::string_view planner_system_v1();
std::string_view actor_system_v1();
std::string_view summarizer_system_v1();
std::string_view synthesizer_system_v1();

}  // namespace wedas::prompts
