// Minimal declarations for the parts of papaparse used here.
declare module "papaparse" {
  export interface ParseError {
    message: string;
  }
  export interface ParseMeta {
    fields?: string[];
  }
  export interface ParseResult<T> {
    data: T[];
    errors: ParseError[];
    meta: ParseMeta;
  }
  export interface ParseConfig {
    header?: boolean;
    skipEmptyLines?: boolean;
  }
  export function parse<T>(input: string, config?: ParseConfig): ParseResult<T>;
  const Papa: { parse: typeof parse };
  export default Papa;
}
