// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <random>
#include <string>
#include <vector>

#include "reer/backends.hpp"
#include "reer/hashing.hpp"
#include "reer/text.hpp"

namespace reer {
namespace {

std::string between(const std::string& s, std::string_view open, std::string_view close,
                    bool last_open = false) {
  auto b = last_open ? s.rfind(open) : s.find(open);
  if (b == std::string::npos) return {};
  b += open.size();
  auto e = s.find(close, b);
  if (e == std::string::npos) return {};
  return s.substr(b, e - b);
}

// Raw words of the text with surrounding ASCII punctuation trimmed (case kept).
std::vector<std::string> plain_words(std::string_view s) {
  std::vector<std::string> out;
  for (auto w : text::split_whitespace(s)) {
    std::size_t b = 0;
    std::size_t e = w.size();
    auto punct = [](char c) {
      return static_cast<unsigned char>(c) < 0x80 && !text::is_word_byte(c);
    };
    while (b < e && punct(w[b])) ++b;
    while (e > b && punct(w[e - 1])) --e;
    if (e > b) out.emplace_back(w.substr(b, e - b));
  }
  return out;
}

std::string phrase(const std::vector<std::string>& words, std::mt19937_64& rng,
                   std::size_t max_len) {
  if (words.empty()) return "the main idea";
  const std::size_t len = 2 + rng() % (max_len - 1);
  const std::size_t start = rng() % words.size();
  std::string out;
  for (std::size_t i = start; i < std::min(words.size(), start + len); ++i) {
    if (!out.empty()) out += ' ';
    out += words[i];
  }
  return out;
}

std::string fill(std::string_view pattern, const std::string& a, const std::string& b) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] == '@' && i + 1 < pattern.size() && (pattern[i + 1] == 'A' || pattern[i + 1] == 'B')) {
      out += pattern[i + 1] == 'A' ? a : b;
      ++i;
    } else {
      out += pattern[i];
    }
  }
  return out;
}

constexpr std::array<std::string_view, 10> kReflections = {
    "Hmm, maybe the piece should lean on something like \"@A\", and later on @B.",
    "Wait, the user said this needs a real point, so I could build around @A and keep @B in view.",
    "Let me think about the wording here: @A feels right, while @B could carry the middle.",
    "But wait, that is a bit abstract; a concrete detail such as @A or @B would help.",
    "Alternatively, I might start from @A and let it grow toward @B.",
    "Maybe the reader connects more with @A; I should also remember @B.",
    "Let me picture it: first @A, then @B, then the turn.",
    "Hmm... I keep coming back to @A, which pairs well with @B.",
    "Wait no, I should not rush past @A, because @B depends on it.",
    "So the texture comes from small things, @A here and @B there.",
};

constexpr std::array<std::string_view, 6> kExtras = {
    "Another thread worth keeping is @A.",
    "A smaller touch could be @A.",
    "I can echo @A somewhere near the middle.",
    "There is room for @A as well.",
    "The image of @A might anchor a paragraph.",
    "Keeping @A close gives the draft some color.",
};

constexpr std::array<std::string_view, 4> kOpeners = {
    "I need to figure out what this task really asks for: @A.",
    "First, I need to understand the request, which is about @A.",
    "The user wants something specific here, roughly @A.",
    "Before writing, I should pin down the goal behind @A.",
};

constexpr std::array<std::string_view, 4> kMiddles = {
    "The core idea I want to build around is @A.",
    "For the content, the heart of it seems to be @A.",
    "The main material I will draw on is @A.",
    "What should carry the piece is @A.",
};

constexpr std::array<std::string_view, 4> kClosers = {
    "For the structure, I will open with a hook, develop the main point and close cleanly.",
    "The plan is a clear beginning, a developed middle and a satisfying ending.",
    "I will keep the structure simple and end on a settled note.",
    "The outline moves from setup to development to a firm conclusion.",
};

}  // namespace

std::string DeterministicBackend::plan(const std::string& prompt, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  const auto query = between(prompt, "Here is a task:\n", "\n\nHere is the solution");
  const auto solution =
      between(prompt, "Here is the solution you will create:\n", "\n\nNow, you need to write");
  const auto qwords = plain_words(query);
  const auto swords = plain_words(solution);
  std::string q;
  for (std::size_t i = 0; i < std::min<std::size_t>(qwords.size(), 8); ++i) {
    if (!q.empty()) q += ' ';
    q += qwords[i];
  }
  if (q.empty()) q = "the request";
  std::vector<std::string> paragraphs;
  paragraphs.push_back(fill(kOpeners[rng() % kOpeners.size()], q, ""));
  for (std::size_t i = 1; i + 1 < std::max<std::size_t>(options_.plan_paragraphs, 2); ++i) {
    paragraphs.push_back(fill(kMiddles[rng() % kMiddles.size()], phrase(swords, rng, 3), ""));
  }
  paragraphs.push_back(std::string(kClosers[rng() % kClosers.size()]));
  std::string body;
  for (const auto& p : paragraphs) {
    if (!body.empty()) body += "\n\n";
    body += p;
  }
  return "<think>\n" + body + "\n</think>";
}

std::string DeterministicBackend::refine(const std::string& prompt, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  const auto solution = between(prompt, "---> **Target Output** \n", " \n---> **Thinking Process**");
  auto target = std::string(text::trim(between(prompt, "<replace>\n", "\n</replace>", true)));
  const auto swords = plain_words(solution);

  std::string reflection =
      fill(kReflections[rng() % kReflections.size()], phrase(swords, rng, 3), phrase(swords, rng, 3));
  for (std::size_t i = 2; i < options_.phrases_per_refinement; ++i) {
    reflection += ' ';
    reflection += fill(kExtras[rng() % kExtras.size()], phrase(swords, rng, 3), "");
  }

  // Insert after the first sentence so the paragraph keeps its opening words
  // and its closing sentence.
  std::string refined;
  auto stop = target.find(". ");
  if (stop == std::string::npos) {
    refined = target + " " + reflection;
  } else {
    refined = target.substr(0, stop + 1) + " " + reflection + target.substr(stop + 1);
  }
  std::string reply;
  if (rng() % 3 == 0) reply += "Sure, here is my revision.\n";
  reply += "<analyze>The paragraph sets up part of the plan; it can carry more detail.</analyze>\n";
  reply += "<refine>" + refined + "</refine>";
  return reply;
}

BackendReply DeterministicBackend::call(const CompletionRequest& request) {
  ++calls_;
  if (request.want_logprobs || request.max_new_tokens <= 0) {
    throw Error(ErrorCode::kProtocol, "deterministic backend does not score");
  }
  const std::uint64_t seed = fnv1a64(request.request_hash());
  BackendReply reply;
  if (request.prompt.find("<refine></refine>") != std::string::npos &&
      request.prompt.find("<replace>") != std::string::npos) {
    reply.text = refine(request.prompt, seed);
  } else if (request.prompt.find("Here is the solution you will create:") != std::string::npos) {
    reply.text = plan(request.prompt, seed);
  } else {
    throw Error(ErrorCode::kMissingFixture, "deterministic backend does not recognize the prompt");
  }
  reply.usage.prompt_tokens = text::word_count(request.prompt);
  reply.usage.completion_tokens = text::word_count(*reply.text);
  return reply;
}

}  // namespace reer
