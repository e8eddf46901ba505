// Live validation for time-expression inputs: the server's date parser is
// the single authority, the widget only displays its verdict.

import type {Api} from "./api.js";
import {ApiError} from "./api.js";

export type TimeFieldVerdict =
  | {ok: true; expr: string; earliest: number; latest: number; display: string}
  | {ok: false; expr: string; message: string};

export async function validateTimeExpression(api: Api,
                                             expr: string): Promise<TimeFieldVerdict> {
  try {
    const parsed = await api.parseDate(expr);
    return {
      ok: true,
      expr,
      earliest: parsed.earliest,
      latest: parsed.latest,
      display: `[${parsed.earliest}, ${parsed.latest}]`,
    };
  } catch (error) {
    if (error instanceof ApiError && error.status === 400) {
      return {ok: false, expr, message: error.message};
    }
    throw error;
  }
}
