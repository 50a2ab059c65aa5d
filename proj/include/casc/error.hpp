#ifndef CASC_ERROR_HPP
#define CASC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace casc {

struct error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct cycle_detected : public error { using error::error; };
struct unscored_edge : public error { using error::error; };
struct no_path : public error { using error::error; };
struct too_many_paths : public error { using error::error; };
struct missing_unigram : public error { using error::error; };
struct empty_corpus : public error { using error::error; };
struct label_out_of_range : public error { using error::error; };
struct empty_span : public error { using error::error; };
struct missing_attribute : public error { using error::error; };
struct dimension_mismatch : public error { using error::error; };
struct all_pruned : public error { using error::error; };
struct empty_result : public error { using error::error; };
struct gold_unreachable : public error { using error::error; };
struct unmapped_label : public error { using error::error; };
struct empty_reference : public error { using error::error; };
struct no_complete_path : public error { using error::error; };
struct parse_error : public error { using error::error; };
struct config_error : public error { using error::error; };

}

#endif
