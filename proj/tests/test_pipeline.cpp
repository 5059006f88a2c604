// filled in with the pipeline module
