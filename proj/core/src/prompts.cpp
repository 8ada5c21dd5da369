#include <string>

#include "destrank/errors.hpp"
#include "destrank/reformulation.hpp"

// Prompt wording is a reconstruction. Each template pins the output shape
// that the matching parser in reformulation.cpp expects.
namespace destrank {

namespace {

const PromptTemplate kQ2E{
    ReformMethod::Q2E,
    "You help travelers find destination cities. Expand the travel query below with "
    "keywords that name the activities, attractions and qualities a matching city "
    "would offer.\n"
    "Return a single line of 5 to 10 keywords separated by semicolons. Do not number "
    "them and do not add any other text.\n\n"
    "Query: {query}",
    "Example of the required format:\n"
    "Query: Cities for a winter holiday\n"
    "ski resorts; christmas markets; ice skating; hot springs; snowy mountains; "
    "cozy cafes"};

const PromptTemplate kQuery2Doc{
    ReformMethod::Query2Doc,
    "You help travelers find destination cities. Answer the travel query below by "
    "recommending three cities.\n"
    "Return exactly three numbered passages in the form:\n"
    "1. City, Country: one or two sentences on why the city fits the query.\n"
    "Do not add any other text.\n\n"
    "Query: {query}",
    "Example of the required format:\n"
    "Query: Cities for a winter holiday\n"
    "1. Quebec City, Canada: A walled old town under snow, with a winter carnival and "
    "nearby ski hills.\n"
    "2. Innsbruck, Austria: An alpine city ringed by ski areas, reachable by cable car "
    "from the centre.\n"
    "3. Sapporo, Japan: Home of a famous snow festival, hot springs and powder skiing."};

const PromptTemplate kGenQR{
    ReformMethod::GenQR,
    "You help travelers find destination cities. Paraphrase the travel query below so "
    "that it states the traveler's underlying intent explicitly.\n"
    "Return one sentence and nothing else.\n\n"
    "Query: {query}",
    "Example of the required format:\n"
    "Query: Cities for a winter holiday\n"
    "Destinations with snowy scenery, winter sports and festive seasonal events."};

const PromptTemplate kEQR{
    ReformMethod::EQR,
    "You help travelers find destination cities. The travel query below can be read "
    "in several ways. Infer {k} distinct subtopics that together cover the intents a "
    "traveler could have behind it. For each subtopic, write an information-rich "
    "elaboration describing what a matching city offers and how it relates to the "
    "query, and end it with two example cities.\n"
    "Return exactly {k} lines, one per subtopic, each in the form:\n"
    "Subtopic Title - elaboration such as City A and City B.\n"
    "Do not number the lines and do not add any other text.\n\n"
    "Query: {query}",
    "Example of the required format:\n"
    "Query: Cities for a winter holiday\n"
    "Ski Towns - Cities next to large ski areas with lifts, rental shops and lively "
    "apres-ski evenings such as Innsbruck and Whistler.\n"
    "Festive Markets - Cities whose squares fill with lights, mulled wine and craft "
    "stalls during the holiday season such as Vienna and Strasbourg.\n"
    "Snow Festivals - Cities that host large winter festivals with ice sculptures and "
    "night events such as Sapporo and Harbin."};

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

const PromptTemplate& prompt_template(ReformMethod method) {
  switch (method) {
    case ReformMethod::Q2E: return kQ2E;
    case ReformMethod::Query2Doc: return kQuery2Doc;
    case ReformMethod::GenQR: return kGenQR;
    case ReformMethod::EQR: return kEQR;
    case ReformMethod::NoQR: break;
  }
  throw Error(Errc::NotApplicable, "NoQR does not prompt the LLM");
}

std::string build_prompt(ReformMethod method, std::string_view query, int k,
                         const PromptOptions& options,
                         const std::vector<std::string>* destination_names) {
  const auto& tmpl = prompt_template(method);
  if (options.destination_list && destination_names == nullptr) {
    throw Error(Errc::MissingDestinationList, std::string(method_name(method)));
  }

  std::string names;
  if (options.destination_list) {
    for (const auto& n : *destination_names) {
      if (!names.empty()) names.push_back('\n');
      names += n;
    }
  }

  std::string prompt = tmpl.template_text;
  replace_all(prompt, "{k}", std::to_string(k));
  replace_all(prompt, "{destination_list}", names);
  replace_all(prompt, "{query}", query);

  if (options.few_shot && !tmpl.few_shot_block.empty()) {
    prompt += "\n\n";
    prompt += tmpl.few_shot_block;
  }
  if (options.destination_list) {
    prompt += "\n\nOnly use cities from this list of valid destinations:\n";
    prompt += names;
  }
  return prompt;
}

}  // namespace destrank
