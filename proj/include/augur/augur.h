#ifndef AUGUR_AUGUR_H
#define AUGUR_AUGUR_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(AUGUR_BUILDING_LIBRARY)
#define AUGUR_API __attribute__((visibility("default")))
#else
#define AUGUR_API
#endif

typedef enum augur_status {
    AUGUR_OK = 0,
    AUGUR_ERR_VALIDATION = 1, /* a transaction or block was rejected */
    AUGUR_ERR_SCENARIO = 2,   /* malformed scenario, action or expectation */
    AUGUR_ERR_IO = 3,
    AUGUR_ERR_ARGUMENT = 4,
    AUGUR_ERR_INTERNAL = 5
} augur_status;

typedef struct augur_node augur_node;

/* Strings returned through `char** out` are JSON, NUL-terminated and owned
 * by the caller; release them with augur_free. */
AUGUR_API void augur_free(char* text);

/* Message of the last failure on the calling thread, or "". */
AUGUR_API const char* augur_last_error(void);

AUGUR_API const char* augur_version(void);

/* Creates a chain in `dir` from a scenario header (config, actors, genesis). */
AUGUR_API augur_status augur_node_init(const char* dir, const char* spec_json, augur_node** out);

/* Opens an existing chain directory, replaying and checking its block log. */
AUGUR_API augur_status augur_node_open(const char* dir, augur_node** out);

/* Writes the chain back to its directory and releases the handle. */
AUGUR_API augur_status augur_node_close(augur_node* node);

/* Executes one action object ({"do": ...}) and persists the result. */
AUGUR_API augur_status augur_node_execute(augur_node* node, const char* action_json, char** result_json);

AUGUR_API augur_status augur_node_status(const augur_node* node, char** status_json);

/* Price quote; `shares` is a decimal string, negative for a sale. */
AUGUR_API augur_status augur_node_quote(const augur_node* node, const char* market, const char* event,
    int outcome, const char* shares, char** quote_json);

/* Runs a scenario; writes the chain to `out_dir` unless it is NULL. */
AUGUR_API augur_status augur_simrun(const char* scenario_json, const char* out_dir, char** report_json);

/* Replays a blocks.jsonl file. AUGUR_OK only when every block checks out. */
AUGUR_API augur_status augur_verify_log(const char* path, char** report_json);

/* Consensus over a CSV report matrix: header "reporter,reputation,<scale>..."
 * where each scale is binary, categorical:<n> or scalar:<lo>:<hi>; cells are
 * numbers, "invalid" or empty for no report. `params_json` may be NULL. */
AUGUR_API augur_status augur_consensus_csv(const char* csv, const char* params_json, char** result_json);

/* Threshold aggregation of {"observations": [...], "events": [...], "theta": x}. */
AUGUR_API augur_status augur_feeds_aggregate(const char* request_json, char** result_json);

#ifdef __cplusplus
}
#endif

#endif
