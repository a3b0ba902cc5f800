#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cowrite/ingest.hpp"

namespace cowrite::coding {

enum class Owner { User, Api };
std::string_view to_string(Owner owner);

// One UTF-16 code unit of the replayed document with its provenance.
struct Glyph {
  char16_t ch = 0;
  std::uint32_t id = 0;             // unique per inserted character
  std::uint32_t event = 0;          // index of the inserting event
  std::int32_t suggestion = -1;     // acceptance event index for api text
  std::uint64_t sentence = 0;       // current sentence identity (0 = none yet)
  Owner owner = Owner::User;
  bool initial = false;             // came from a snapshot, not a typed insert
};

// [begin, end) spans the sentence text; leading whitespace is excluded.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// A sentence ends at a run of '.', '!' or '?' that is followed by whitespace
// or the end of the text. Abbreviations are not special-cased.
std::vector<SentenceSpan> segment_sentences(std::u16string_view text);

// Index of the sentence whose region holds `pos`. Sentence i owns positions
// [begin_i, begin_{i+1}); the first also owns everything before it.
std::size_t sentence_at(const std::vector<SentenceSpan>& spans, std::size_t pos);

struct SentenceState {
  std::uint64_t id = 0;
  std::size_t index = 0;
  std::string text;
  Owner ownership = Owner::User;
  // Text right after the most recent accepted suggestion went into it.
  std::optional<std::string> anchor;
};

struct RevisedSentence {
  std::uint64_t id = 0;
  Owner ownership = Owner::User;
  std::optional<std::string> anchor;
  std::optional<std::string> after;  // empty when the edit removed it
};

// What one replayed event did to the document.
struct Step {
  std::size_t event_index = 0;
  std::size_t sentence_index = 0;   // sentence the event belongs to
  bool is_edit = false;             // text-insert / text-delete
  bool at_end = false;              // insert at the end of the content
  bool in_text = false;             // any other edit
  std::size_t length_before = 0;    // document length before the event
  std::size_t inserted = 0;         // typed characters added
  std::vector<RevisedSentence> revised;          // sentences touched by the edit
  std::vector<std::int32_t> touched_suggestions; // for user in-text edits of api sentences
  std::vector<std::uint64_t> relocated;          // identities whose order changed
};

// Replays a session event by event, tracking characters, sentence identity
// and ownership. Identity follows characters: a sentence keeps the identity
// of the previous sentence it shares the most characters with. A sentence
// that reappears with the exact text of a removed one (cut and paste)
// revives that identity, which is what makes relocation visible.
class SentenceTracker {
 public:
  explicit SentenceTracker(const ingest::Session& session);

  bool finished() const { return next_ >= session_->events.size(); }

  // Processes the next event. Throws ReplayGap when an edit cannot be
  // placed and no snapshot is available.
  const Step& advance();

  const std::vector<Glyph>& glyphs() const { return doc_; }
  std::vector<SentenceState> sentences() const;
  std::u16string text() const;

 private:
  struct Live {
    std::uint64_t id;
    std::u16string text;
    Owner ownership;
    std::optional<std::string> anchor;
  };
  struct Tombstone {
    std::uint64_t id;
    std::u16string text;
    Owner ownership;
    std::optional<std::string> anchor;
  };

  void apply_event(const ingest::Event& ev);
  void insert_glyphs(std::size_t pos, std::u16string_view text, const ingest::Event& ev, bool initial);
  void reconcile_snapshot(const std::string& snapshot, const ingest::Event& ev);
  void resegment(const ingest::Event& ev);
  std::size_t content_end() const;
  std::u16string span_text(const SentenceSpan& span) const;

  const ingest::Session* session_;
  std::size_t next_ = 0;
  std::vector<Glyph> doc_;
  std::vector<SentenceSpan> spans_;
  std::vector<Live> live_;              // parallel to spans_
  std::vector<Tombstone> tombstones_;
  std::vector<std::uint64_t> order_;    // last known arrangement incl. removed ids
  std::uint32_t next_glyph_ = 1;
  std::uint64_t next_sentence_ = 1;
  std::int32_t last_accept_ = -1;
  std::size_t cursor_ = 0;
  Step step_;
};

// One entry per event: the sentence list after that event.
using SentenceHistory = std::vector<std::vector<SentenceState>>;
SentenceHistory track_sentences(const ingest::Session& session);

}  // namespace cowrite::coding
