#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace contactseq {

// Per-frame contact annotation. Unlabeled marks frames the pseudo-labeler
// left without a decision; serialized as -1.
enum class Label : int8_t {
    NoContact = 0,
    Contact = 1,
    Unlabeled = -1,
};

struct LabelSeq {
    std::vector<Label> states;

    LabelSeq() = default;
    explicit LabelSeq(std::size_t n, Label fill = Label::Unlabeled) : states(n, fill) {}

    std::size_t size() const { return states.size(); }
    bool empty() const { return states.empty(); }
    Label& operator[](std::size_t i) { return states[i]; }
    Label operator[](std::size_t i) const { return states[i]; }

    std::size_t count(Label value) const {
        std::size_t n = 0;
        for (Label s : states)
            if (s == value) n++;
        return n;
    }
    std::size_t count_labeled() const { return states.size() - count(Label::Unlabeled); }
    bool fully_labeled() const { return count(Label::Unlabeled) == 0; }

    bool operator==(const LabelSeq& other) const { return states == other.states; }
};

inline Label flip(Label value) {
    if (value == Label::Contact) return Label::NoContact;
    if (value == Label::NoContact) return Label::Contact;
    return Label::Unlabeled;
}

struct TrackIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown by estimate_background_homography when fewer than four usable
// background samples exist or the sample set is degenerate.
struct HomographyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a, used for content checksums and per-track seed derivation.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < n; i++) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a_str(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(s.data(), s.size(), h);
}

}  // namespace contactseq
