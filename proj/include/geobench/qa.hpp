#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geobench/annotation.hpp"
#include "geobench/rng.hpp"
#include "json.hpp"

namespace geobench {

enum class Task { cls, cnt, grd, rlat };
enum class Format { multiple_choice, true_false, free_form };

std::string to_string(Task task);
std::string to_string(Format format);
std::optional<Task> task_from_string(const std::string& s);
std::optional<Format> format_from_string(const std::string& s);

struct QAFlags {
  bool marker_mode = false;
  bool overlap_mode = false;
  bool conflict_mode = false;
  bool vertex_random = false;
  bool operator==(const QAFlags&) const = default;
};

struct QAItem {
  std::string qid;
  std::string image_id;
  std::string subject = "plane";
  Task task = Task::cls;
  Format format = Format::multiple_choice;
  std::string question;               // full text, choices clause included
  std::vector<std::string> choices;   // 4 for MC, 2 for TF, empty for free-form
  std::string answer;                 // letter, box text, or vertex list
  std::string template_id;
  std::uint64_t seed = 0;
  QAFlags flags;
  int canvas_width = 512;
  int canvas_height = 512;
  std::optional<Box> answer_box;  // grounding ground truth (numeric mode)

  nlohmann::ordered_json to_json() const;
  static QAItem from_json(const nlohmann::json& j);
};

struct QAOptions {
  int count = 1;                     // items to generate (ambiguous targets are skipped)
  bool overlap_mode = false;         // count every object, not just prominent ones
  bool vertex_random = false;        // permute vertex strings in question text
  bool vertex_list_grounding = false;
  std::optional<bool> tf_polarity;   // force the yes/no polarity of true/false items
};

// Template-driven question generation. Unsupported (task, format) pairs throw
// std::invalid_argument; ambiguous targets are skipped, so fewer than
// options.count items may come back.
std::vector<QAItem> generate_qa(const Annotation& annotation, Task task, Format format,
                                std::uint64_t seed, const QAOptions& options = {});

// Shape-name distractor pool: every registry shape belongs to exactly one
// family; hard draws pull at least one distractor from the truth's family.
struct DistractorPool {
  std::vector<std::pair<std::string, std::vector<std::string>>> families;
  double hard_rate = 0.75;

  const std::vector<std::string>* family_of(const std::string& shape) const;
  std::vector<std::string> all_members() const;
};

const DistractorPool& plane_distractor_pool();
const DistractorPool& solid_distractor_pool();
const DistractorPool& graph_distractor_pool();

std::vector<std::string> sample_distractors(const std::string& truth, const DistractorPool& pool,
                                            std::uint64_t seed);

// Permutes multiple-choice correct positions so every letter lands close to
// an even share. True/false polarity is balanced at generation time, so
// true/false items pass through unchanged.
std::vector<QAItem> balance_answers(std::vector<QAItem> items, std::uint64_t seed);

enum class TextDistractorMode { unrelated, conflict };

// Appends a textual distractor; the stored answer never changes. Conflict
// mode requires a relationship item whose true relation is identifiable and
// throws std::invalid_argument otherwise.
QAItem inject_text_distractor(const QAItem& item, TextDistractorMode mode,
                              const Annotation& annotation);

struct Stats {
  int total = 0;
  std::map<std::string, int> by_task;
  std::map<std::string, int> by_subject;
  std::map<std::string, int> by_format;
  int unique_images = 0;
  int unique_questions = 0;
  int unique_answers = 0;
  std::map<std::string, int> answer_letters;  // multiple-choice correct letters
  std::map<std::string, int> tf_answers;      // true/false correct letters
  double avg_question_length = 0.0;           // whitespace-separated tokens

  nlohmann::ordered_json to_json() const;
};

Stats benchmark_stats(const std::vector<QAItem>& items);

// JSONL helpers.
std::vector<QAItem> read_qa(const std::string& path);
void write_qa(const std::string& path, const std::vector<QAItem>& items);

// Natural-language description of an object ("square ABCD",
// "large red metal cube", "red pie slice").
std::string object_description(const Annotation& annotation, const AnnotationObject& obj);

}  // namespace geobench
