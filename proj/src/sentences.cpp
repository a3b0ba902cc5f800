#include "cowrite/sentences.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "cowrite/error.hpp"
#include "cowrite/utf.hpp"

namespace cowrite::coding {

using ingest::Event;
using ingest::EventName;
using ingest::EventSource;

namespace {

constexpr std::size_t kMaxTombstones = 512;

bool is_space(char16_t c) {
  return c == u' ' || c == u'\t' || c == u'\n' || c == u'\r' || c == u'\f' || c == u'\v' ||
         c == 0x00A0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
         c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

bool is_terminator(char16_t c) { return c == u'.' || c == u'!' || c == u'?'; }

// Indices (into `seq`) of one longest strictly increasing subsequence.
std::vector<std::size_t> longest_increasing(const std::vector<std::size_t>& seq) {
  std::vector<std::size_t> tails;  // indices into seq
  std::vector<std::ptrdiff_t> prev(seq.size(), -1);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    auto it = std::lower_bound(tails.begin(), tails.end(), seq[i],
                               [&](std::size_t t, std::size_t v) { return seq[t] < v; });
    if (it != tails.begin()) prev[i] = static_cast<std::ptrdiff_t>(*(it - 1));
    if (it == tails.end()) {
      tails.push_back(i);
    } else {
      *it = i;
    }
  }
  std::vector<std::size_t> out;
  if (tails.empty()) return out;
  for (auto i = static_cast<std::ptrdiff_t>(tails.back()); i >= 0; i = prev[static_cast<std::size_t>(i)]) {
    out.push_back(static_cast<std::size_t>(i));
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::optional<std::size_t> attribute_int(const Event& ev, const std::string& key) {
  auto it = ev.attributes.find(key);
  if (it == ev.attributes.end()) return std::nullopt;
  std::size_t v = 0;
  const auto& s = it->second;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(Owner owner) { return owner == Owner::User ? "user" : "api"; }

std::vector<SentenceSpan> segment_sentences(std::u16string_view text) {
  std::vector<SentenceSpan> spans;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i == n) break;
    const std::size_t begin = i;
    std::size_t j = i;
    bool closed = false;
    while (j < n) {
      if (is_terminator(text[j])) {
        std::size_t k = j;
        while (k < n && is_terminator(text[k])) ++k;
        if (k == n || is_space(text[k])) {
          spans.push_back({begin, k});
          i = k;
          closed = true;
          break;
        }
        j = k;
      } else {
        ++j;
      }
    }
    if (!closed) {
      std::size_t end = n;
      while (end > begin && is_space(text[end - 1])) --end;
      spans.push_back({begin, end});
      i = n;
    }
  }
  return spans;
}

std::size_t sentence_at(const std::vector<SentenceSpan>& spans, std::size_t pos) {
  if (spans.empty()) return 0;
  auto it = std::upper_bound(spans.begin(), spans.end(), pos,
                             [](std::size_t p, const SentenceSpan& s) { return p < s.begin; });
  if (it == spans.begin()) return 0;
  return static_cast<std::size_t>(it - spans.begin()) - 1;
}

SentenceTracker::SentenceTracker(const ingest::Session& session) : session_(&session) {}

std::u16string SentenceTracker::text() const {
  std::u16string out;
  out.reserve(doc_.size());
  for (const auto& g : doc_) out.push_back(g.ch);
  return out;
}

std::u16string SentenceTracker::span_text(const SentenceSpan& span) const {
  std::u16string out;
  out.reserve(span.end - span.begin);
  for (std::size_t i = span.begin; i < span.end; ++i) out.push_back(doc_[i].ch);
  return out;
}

std::size_t SentenceTracker::content_end() const {
  std::size_t end = doc_.size();
  while (end > 0 && is_space(doc_[end - 1].ch)) --end;
  return end;
}

std::vector<SentenceState> SentenceTracker::sentences() const {
  std::vector<SentenceState> out;
  out.reserve(spans_.size());
  for (std::size_t i = 0; i < spans_.size(); ++i) {
    out.push_back({live_[i].id, i, to_utf8(live_[i].text), live_[i].ownership, live_[i].anchor});
  }
  return out;
}

void SentenceTracker::insert_glyphs(std::size_t pos, std::u16string_view text, const Event& ev,
                                    bool initial) {
  std::vector<Glyph> glyphs;
  glyphs.reserve(text.size());
  for (char16_t c : text) {
    Glyph g;
    g.ch = c;
    g.id = next_glyph_++;
    g.event = static_cast<std::uint32_t>(ev.event_index);
    g.owner = ev.source == EventSource::Api ? Owner::Api : Owner::User;
    g.suggestion = g.owner == Owner::Api ? last_accept_ : -1;
    g.initial = initial;
    glyphs.push_back(g);
  }
  doc_.insert(doc_.begin() + static_cast<std::ptrdiff_t>(pos), glyphs.begin(), glyphs.end());
  if (!initial) step_.inserted += text.size();
}

void SentenceTracker::reconcile_snapshot(const std::string& snapshot, const Event& ev) {
  const std::u16string target = to_utf16(snapshot);
  const std::u16string current = text();
  if (target == current) return;
  std::size_t prefix = 0;
  while (prefix < target.size() && prefix < current.size() && target[prefix] == current[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < target.size() - prefix && suffix < current.size() - prefix &&
         target[target.size() - 1 - suffix] == current[current.size() - 1 - suffix])
    ++suffix;
  doc_.erase(doc_.begin() + static_cast<std::ptrdiff_t>(prefix),
             doc_.begin() + static_cast<std::ptrdiff_t>(current.size() - suffix));
  insert_glyphs(prefix, std::u16string_view(target).substr(prefix, target.size() - suffix - prefix), ev,
                true);
}

void SentenceTracker::resegment(const Event& ev) {
  const std::u16string full = text();
  std::vector<SentenceSpan> spans = segment_sentences(full);

  // Character overlap between each new sentence and the previous identities.
  struct Candidate {
    std::size_t count;
    std::size_t fresh;
    std::uint64_t old_id;
  };
  std::map<std::uint64_t, std::size_t> old_slot;
  for (std::size_t i = 0; i < live_.size(); ++i) old_slot[live_[i].id] = i;
  std::vector<Candidate> candidates;
  for (std::size_t n = 0; n < spans.size(); ++n) {
    std::map<std::uint64_t, std::size_t> counts;
    for (std::size_t k = spans[n].begin; k < spans[n].end; ++k) {
      if (doc_[k].sentence != 0 && old_slot.count(doc_[k].sentence)) ++counts[doc_[k].sentence];
    }
    for (const auto& [id, c] : counts) candidates.push_back({c, n, id});
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.fresh != b.fresh) return a.fresh < b.fresh;
    return old_slot[a.old_id] < old_slot[b.old_id];
  });

  std::vector<Live> next(spans.size(), Live{0, {}, Owner::User, std::nullopt});
  std::vector<bool> old_taken(live_.size(), false);
  for (const auto& c : candidates) {
    const std::size_t slot = old_slot[c.old_id];
    if (next[c.fresh].id != 0 || old_taken[slot]) continue;
    next[c.fresh] = live_[slot];
    old_taken[slot] = true;
  }

  for (std::size_t i = 0; i < live_.size(); ++i) {
    if (!old_taken[i]) {
      tombstones_.push_back({live_[i].id, live_[i].text, live_[i].ownership, live_[i].anchor});
    }
  }
  if (tombstones_.size() > kMaxTombstones) {
    tombstones_.erase(tombstones_.begin(),
                      tombstones_.begin() + static_cast<std::ptrdiff_t>(tombstones_.size() - kMaxTombstones));
  }

  for (std::size_t n = 0; n < spans.size(); ++n) {
    const std::u16string body = full.substr(spans[n].begin, spans[n].end - spans[n].begin);
    next[n].text = body;
    if (next[n].id != 0) continue;
    auto revived = std::find_if(tombstones_.rbegin(), tombstones_.rend(),
                                [&](const Tombstone& t) { return t.text == body; });
    if (revived != tombstones_.rend()) {
      next[n] = {revived->id, body, revived->ownership, revived->anchor};
      tombstones_.erase(std::next(revived).base());
    } else {
      next[n] = {next_sentence_++, body, Owner::User, std::nullopt};
      std::size_t api = 0, visible = 0;
      for (std::size_t k = spans[n].begin; k < spans[n].end; ++k) {
        if (is_space(doc_[k].ch)) continue;
        ++visible;
        if (doc_[k].owner == Owner::Api) ++api;
      }
      if (2 * api > visible) next[n].ownership = Owner::Api;
    }
  }

  // A sentence becomes api-owned once accepted text makes up most of it.
  if (ev.source == EventSource::Api && step_.inserted > 0) {
    for (std::size_t n = 0; n < spans.size(); ++n) {
      std::size_t api = 0, visible = 0;
      bool from_event = false;
      for (std::size_t k = spans[n].begin; k < spans[n].end; ++k) {
        if (doc_[k].event == ev.event_index && !doc_[k].initial) from_event = true;
        if (is_space(doc_[k].ch)) continue;
        ++visible;
        if (doc_[k].owner == Owner::Api) ++api;
      }
      if (!from_event) continue;
      if (2 * api > visible) next[n].ownership = Owner::Api;
      if (next[n].ownership == Owner::Api) next[n].anchor = to_utf8(next[n].text);
    }
  }

  for (auto& g : doc_) g.sentence = 0;
  for (std::size_t n = 0; n < spans.size(); ++n) {
    for (std::size_t k = spans[n].begin; k < spans[n].end; ++k) doc_[k].sentence = next[n].id;
  }

  // Relocation: identities present in both arrangements whose relative order
  // is not part of the longest order-preserving subsequence.
  std::map<std::uint64_t, std::size_t> ref_pos;
  for (std::size_t i = 0; i < order_.size(); ++i) ref_pos[order_[i]] = i;
  std::vector<std::size_t> seq;
  std::vector<std::uint64_t> seq_ids;
  for (const auto& l : next) {
    if (auto it = ref_pos.find(l.id); it != ref_pos.end()) {
      seq.push_back(it->second);
      seq_ids.push_back(l.id);
    }
  }
  std::vector<bool> kept(seq.size(), false);
  for (std::size_t i : longest_increasing(seq)) kept[i] = true;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!kept[i]) step_.relocated.push_back(seq_ids[i]);
  }

  // New arrangement: live order, with removed identities kept after the
  // element that preceded them before.
  std::vector<std::uint64_t> order;
  order.reserve(next.size() + tombstones_.size());
  for (const auto& l : next) order.push_back(l.id);
  std::map<std::uint64_t, bool> is_tomb;
  for (const auto& t : tombstones_) is_tomb[t.id] = true;
  std::uint64_t anchor_id = 0;
  for (std::uint64_t id : order_) {
    if (is_tomb.count(id) && std::find(order.begin(), order.end(), id) == order.end()) {
      auto at = anchor_id == 0 ? order.begin() : std::find(order.begin(), order.end(), anchor_id);
      if (anchor_id != 0 && at != order.end()) ++at;
      anchor_id = id;
      order.insert(at, id);
    } else if (std::find(order.begin(), order.end(), id) != order.end()) {
      anchor_id = id;
    }
  }
  order_ = std::move(order);
  spans_ = std::move(spans);
  live_ = std::move(next);
}

void SentenceTracker::apply_event(const Event& ev) {
  if (ev.name == EventName::SuggestionAccept) last_accept_ = static_cast<std::int32_t>(ev.event_index);
  const bool is_edit = ev.name == EventName::TextInsert || ev.name == EventName::TextDelete;
  bool changed = false;
  std::size_t focus = cursor_;

  if (is_edit) {
    step_.is_edit = true;
    bool placed = false;
    if (ev.cursor_range && ev.cursor_range->start <= ev.cursor_range->end &&
        ev.cursor_range->end <= doc_.size()) {
      const std::size_t s = ev.cursor_range->start;
      const std::size_t e = ev.cursor_range->end;
      const std::u16string inserted =
          ev.name == EventName::TextInsert && ev.text_delta ? to_utf16(*ev.text_delta) : std::u16string{};

      // Sentences the edit touches, before it happens.
      std::vector<std::size_t> touched;
      if (!spans_.empty()) {
        const std::size_t first = sentence_at(spans_, s);
        const std::size_t last = e > s ? sentence_at(spans_, e - 1) : first;
        for (std::size_t i = first; i <= last; ++i) touched.push_back(i);
      }
      step_.at_end = ev.name == EventName::TextInsert && s == e && s >= content_end();
      step_.in_text = !step_.at_end && (e > s || !inserted.empty());

      std::vector<std::int32_t> suggestions;
      for (std::size_t i : touched) {
        step_.revised.push_back({live_[i].id, live_[i].ownership, live_[i].anchor, std::nullopt});
        if (live_[i].ownership != Owner::Api) continue;
        const std::size_t region_begin = i == 0 ? 0 : spans_[i].begin;
        const std::size_t region_end = i + 1 < spans_.size() ? spans_[i + 1].begin : doc_.size();
        for (std::size_t k = region_begin; k < region_end; ++k) {
          if (doc_[k].suggestion >= 0) suggestions.push_back(doc_[k].suggestion);
        }
      }
      if (ev.source == EventSource::User && step_.in_text) {
        std::sort(suggestions.begin(), suggestions.end());
        suggestions.erase(std::unique(suggestions.begin(), suggestions.end()), suggestions.end());
        step_.touched_suggestions = std::move(suggestions);
      }

      doc_.erase(doc_.begin() + static_cast<std::ptrdiff_t>(s), doc_.begin() + static_cast<std::ptrdiff_t>(e));
      if (!inserted.empty()) insert_glyphs(s, inserted, ev, false);
      cursor_ = s + inserted.size();
      focus = s;
      placed = true;
      changed = e > s || !inserted.empty();
    }
    if (ev.current_doc) {
      const std::size_t before = doc_.size();
      reconcile_snapshot(*ev.current_doc, ev);
      changed = changed || before != doc_.size() || !placed;
      if (!placed) cursor_ = std::min(cursor_, doc_.size());
    } else if (!placed) {
      throw ReplayGap(ev.event_index);
    }
  } else {
    if (ev.current_doc) {
      reconcile_snapshot(*ev.current_doc, ev);
      changed = true;
    }
    if (auto c = attribute_int(ev, "currentCursor")) {
      cursor_ = *c;
    } else if (ev.cursor_range) {
      cursor_ = ev.cursor_range->start;
    }
    cursor_ = std::min(cursor_, doc_.size());
    focus = cursor_;
  }

  if (changed) resegment(ev);
  step_.sentence_index = sentence_at(spans_, std::min(focus, doc_.size()));
  for (auto& r : step_.revised) {
    for (const auto& l : live_) {
      if (l.id == r.id) {
        r.after = to_utf8(l.text);
        break;
      }
    }
  }
}

const Step& SentenceTracker::advance() {
  const Event& ev = session_->events.at(next_);
  step_ = Step{};
  step_.event_index = ev.event_index;
  step_.length_before = doc_.size();
  apply_event(ev);
  ++next_;
  return step_;
}

SentenceHistory track_sentences(const ingest::Session& session) {
  SentenceHistory history;
  history.reserve(session.events.size());
  SentenceTracker tracker(session);
  while (!tracker.finished()) {
    tracker.advance();
    history.push_back(tracker.sentences());
  }
  return history;
}

}  // namespace cowrite::coding
