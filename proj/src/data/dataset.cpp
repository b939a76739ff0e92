#include "embedhalluc/data/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "embedhalluc/errors.hpp"

namespace embedhalluc::data {

std::string to_string(TaskKind kind) { return kind == TaskKind::single_sentence ? "single" : "pair"; }

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::accuracy: return "accuracy";
        case MetricKind::matthews: return "matthews";
        case MetricKind::f1: return "f1";
    }
    return "accuracy";
}

TaskKind parse_task_kind(const std::string& text) {
    if (text == "single" || text == "single-sentence" || text == "single_sentence") return TaskKind::single_sentence;
    if (text == "pair" || text == "sentence-pair" || text == "sentence_pair") return TaskKind::sentence_pair;
    throw ConfigError("unknown task kind '" + text + "'");
}

MetricKind parse_metric_kind(const std::string& text) {
    if (text == "accuracy" || text == "acc") return MetricKind::accuracy;
    if (text == "matthews" || text == "mcc") return MetricKind::matthews;
    if (text == "f1") return MetricKind::f1;
    throw ConfigError("unknown metric '" + text + "'");
}

void TaskDataset::validate() const {
    if (num_classes == 0) throw DataError("dataset '" + name + "' declares zero classes");
    std::vector<std::size_t> counts(num_classes, 0);
    for (const auto& ex : examples) {
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= num_classes) {
            throw DataError("dataset '" + name + "' has label " + std::to_string(ex.label) + " outside [0, " +
                            std::to_string(num_classes) + ")");
        }
        ++counts[static_cast<std::size_t>(ex.label)];
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (counts[c] == 0) throw DataError("dataset '" + name + "' has no example of class " + std::to_string(c));
    }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return fields;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

TaskDataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file " + path.string());
    if (schema.labels.empty()) throw ConfigError("dataset schema for '" + schema.name + "' lists no labels");
    TaskDataset ds;
    ds.name = schema.name;
    ds.kind = schema.kind;
    ds.metric = schema.metric;
    ds.label_names = schema.labels;
    ds.num_classes = schema.labels.size();
    const std::size_t expected = schema.kind == TaskKind::sentence_pair ? 3 : 2;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != expected) {
            throw ParseError("expected " + std::to_string(expected) + " tab-separated fields, found " +
                                 std::to_string(fields.size()) + " in " + path.string(),
                             line_no);
        }
        const std::string& label = fields.back();
        const auto it = std::find(schema.labels.begin(), schema.labels.end(), label);
        if (it == schema.labels.end()) {
            throw LabelError("unknown label '" + label + "' at line " + std::to_string(line_no) + " of " +
                             path.string());
        }
        Example ex;
        ex.text = fields[0];
        if (expected == 3) ex.text2 = fields[1];
        ex.label = static_cast<int>(it - schema.labels.begin());
        ds.examples.push_back(std::move(ex));
    }
    ds.validate();
    return ds;
}

void save_dataset(const TaskDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file " + path.string());
    for (const auto& ex : dataset.examples) {
        out << ex.text << '\t';
        if (dataset.kind == TaskKind::sentence_pair) out << ex.text2 << '\t';
        const auto label = static_cast<std::size_t>(ex.label);
        out << (label < dataset.label_names.size() ? dataset.label_names[label] : std::to_string(ex.label)) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void validate_synonyms(const SynonymTable& table) {
    for (const auto& [word, syns] : table) {
        if (std::find(syns.begin(), syns.end(), word) != syns.end()) {
            throw DataError("synonym table lists '" + word + "' as its own synonym");
        }
    }
}

SynonymTable load_synonyms(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open synonym file " + path.string());
    SynonymTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2 || fields[0].empty()) throw ParseError("malformed synonym entry", line_no);
        auto& syns = table[fields[0]];
        std::stringstream ss(fields[1]);
        std::string syn;
        while (std::getline(ss, syn, ',')) {
            if (!syn.empty()) syns.push_back(syn);
        }
    }
    validate_synonyms(table);
    return table;
}

WordVectors load_word_vectors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open word vector file " + path.string());
    WordVectors table;
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2 || fields[0].empty()) throw ParseError("malformed word vector entry", line_no);
        std::vector<double> v;
        std::istringstream ss(fields[1]);
        std::string item;
        while (ss >> item) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::logic_error&) {
                throw ParseError("bad number '" + item + "' in word vector", line_no);
            }
        }
        if (v.empty()) throw ParseError("empty word vector", line_no);
        if (dim == 0) dim = v.size();
        if (v.size() != dim) throw ParseError("word vector width differs from the first row", line_no);
        if (!table.emplace(fields[0], std::move(v)).second) throw ParseError("duplicate word vector", line_no);
    }
    if (table.empty()) throw DataError("word vector file " + path.string() + " is empty");
    return table;
}

void save_word_vectors(const WordVectors& vectors, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write word vector file " + path.string());
    char buf[32];
    for (const auto& [word, v] : vectors) {
        out << word << '\t';
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", v[i]);
            out << (i ? " " : "") << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::size_t word_vector_dim(const WordVectors& vectors) {
    if (vectors.empty()) throw DataError("no word vectors");
    const std::size_t dim = vectors.begin()->second.size();
    for (const auto& [word, v] : vectors)
        if (v.size() != dim) throw DataError("word vector for '" + word + "' has width " + std::to_string(v.size()));
    return dim;
}

void save_synonyms(const SynonymTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write synonym file " + path.string());
    for (const auto& [word, syns] : table) {
        out << word << '\t';
        for (std::size_t i = 0; i < syns.size(); ++i) out << (i ? "," : "") << syns[i];
        out << '\n';
    }
}

Vocab::Vocab() {
    for (std::string special : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) {
        ids_.emplace(special, static_cast<int>(words_.size()));
        words_.push_back(special);
    }
}

Vocab Vocab::from_words(const std::vector<std::string>& words) {
    Vocab v;
    for (const auto& w : words) {
        if (v.ids_.emplace(w, static_cast<int>(v.words_.size())).second) v.words_.push_back(w);
    }
    return v;
}

Vocab Vocab::build(const std::vector<std::string>& texts) {
    std::set<std::string> unique;
    for (const auto& t : texts)
        for (auto& w : split_words(t)) unique.insert(std::move(w));
    return from_words(std::vector<std::string>(unique.begin(), unique.end()));
}

int Vocab::id(const std::string& word) const {
    const auto it = ids_.find(word);
    return it == ids_.end() ? unk : it->second;
}

const std::string& Vocab::word(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
        throw IndexError("token id " + std::to_string(id) + " outside vocabulary of size " +
                         std::to_string(words_.size()));
    }
    return words_[static_cast<std::size_t>(id)];
}

Vocab build_vocab(const TaskDataset& dataset) {
    std::vector<std::string> texts;
    for (const auto& ex : dataset.examples) {
        texts.push_back(ex.text);
        if (!ex.text2.empty()) texts.push_back(ex.text2);
    }
    return Vocab::build(texts);
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string w;
    while (ss >> w) {
        std::transform(w.begin(), w.end(), w.begin(), [](unsigned char ch) { return std::tolower(ch); });
        out.push_back(std::move(w));
    }
    return out;
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

std::vector<int> tokenize(const std::string& text, const Vocab& vocab) {
    std::vector<int> ids;
    for (const auto& w : split_words(text)) ids.push_back(vocab.id(w));
    return ids;
}

std::vector<int> tokenize_pair(const std::string& text1, const std::string& text2, const Vocab& vocab) {
    auto ids = tokenize(text1, vocab);
    ids.push_back(Vocab::sep);
    const auto second = tokenize(text2, vocab);
    ids.insert(ids.end(), second.begin(), second.end());
    return ids;
}

std::vector<int> tokenize_example(const Example& example, TaskKind kind, const Vocab& vocab) {
    return kind == TaskKind::sentence_pair ? tokenize_pair(example.text, example.text2, vocab)
                                           : tokenize(example.text, vocab);
}

std::string detokenize(const std::vector<int>& ids, const Vocab& vocab) {
    std::vector<std::string> words;
    for (int id : ids) words.push_back(vocab.word(id));
    return join_words(words);
}

}  // namespace embedhalluc::data
