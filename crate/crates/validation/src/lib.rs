//! Holds the `acceptance` test target; it runs after the library suites so
//! a failing criterion does not hide their results.
