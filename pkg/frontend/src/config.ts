/**
 * Build-time configuration, baked into the bundle. An empty base URL means
 * the API lives on the same origin as the page.
 */

export const API_BASE_URL = "";
