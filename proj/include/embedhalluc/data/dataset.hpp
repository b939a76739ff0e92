#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace embedhalluc::data {

enum class TaskKind { single_sentence, sentence_pair };
enum class MetricKind { accuracy, matthews, f1 };

std::string to_string(TaskKind kind);
std::string to_string(MetricKind kind);
TaskKind parse_task_kind(const std::string& text);
MetricKind parse_metric_kind(const std::string& text);

struct Example {
    std::string text;
    std::string text2;  // empty for single-sentence tasks
    int label = 0;
};

struct TaskDataset {
    std::string name;
    TaskKind kind = TaskKind::single_sentence;
    std::vector<Example> examples;
    std::size_t num_classes = 0;
    MetricKind metric = MetricKind::accuracy;
    std::vector<std::string> label_names;

    // Labels in [0, C) and every class present; throws DataError otherwise.
    void validate() const;
};

// How to read a TSV file: `text<TAB>label` or `text1<TAB>text2<TAB>label`.
struct DatasetSchema {
    std::string name;
    TaskKind kind = TaskKind::single_sentence;
    std::vector<std::string> labels;  // label strings; index = class id
    MetricKind metric = MetricKind::accuracy;
};

TaskDataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema);
void save_dataset(const TaskDataset& dataset, const std::filesystem::path& path);

// Word -> synonyms. Lines are `word<TAB>syn1,syn2,...`.
using SynonymTable = std::map<std::string, std::vector<std::string>>;

SynonymTable load_synonyms(const std::filesystem::path& path);
void save_synonyms(const SynonymTable& table, const std::filesystem::path& path);
// Rejects entries listing the key as its own synonym.
void validate_synonyms(const SynonymTable& table);

// Word -> fixed-width vector, standing in for a pre-trained embedding table.
// Lines are `word<TAB>v1 v2 ... vE`.
using WordVectors = std::map<std::string, std::vector<double>>;

WordVectors load_word_vectors(const std::filesystem::path& path);
void save_word_vectors(const WordVectors& vectors, const std::filesystem::path& path);
// Common width; throws DataError when rows disagree or the table is empty.
std::size_t word_vector_dim(const WordVectors& vectors);

// Dense ids with PAD, UNK, CLS, SEP first.
class Vocab {
public:
    static constexpr int pad = 0;
    static constexpr int unk = 1;
    static constexpr int cls = 2;
    static constexpr int sep = 3;
    static constexpr std::size_t num_specials = 4;

    Vocab();
    // Sorted, deduplicated lowercase words from whitespace-split texts.
    static Vocab build(const std::vector<std::string>& texts);
    static Vocab from_words(const std::vector<std::string>& words);

    int id(const std::string& word) const;
    const std::string& word(int id) const;
    std::size_t size() const { return words_.size(); }
    const std::vector<std::string>& words() const { return words_; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> ids_;
};

Vocab build_vocab(const TaskDataset& dataset);

std::vector<std::string> split_words(const std::string& text);
std::string join_words(const std::vector<std::string>& words);

// Whitespace split, lowercase, unknown words -> UNK.
std::vector<int> tokenize(const std::string& text, const Vocab& vocab);
// text1 SEP text2.
std::vector<int> tokenize_pair(const std::string& text1, const std::string& text2, const Vocab& vocab);
std::vector<int> tokenize_example(const Example& example, TaskKind kind, const Vocab& vocab);
std::string detokenize(const std::vector<int>& ids, const Vocab& vocab);

}  // namespace embedhalluc::data
