package org.owasp.benchmark.testcode;

import java.io.IOException;

import javax.servlet.ServletException;
import javax.servlet.annotation.WebServlet;
import javax.servlet.http.HttpServlet;
import javax.servlet.http.HttpServletRequest;
import javax.servlet.http.HttpServletResponse;

@WebServlet(value = "/sqli-00/BenchmarkTest00003")
public class BenchmarkTest00003 extends HttpServlet {

    private static final long serialVersionUID = 1L;

    private final java.util.Properties benchprops =
            org.owasp.benchmark.helpers.Utils.loadBenchmarkProperties();

    @Override
    public void doGet(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        doPost(request, response);
    }

    @Override
    public void doPost(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        response.setContentType("text/html;charset=UTF-8");

        java.sql.Statement statement = org.owasp.benchmark.helpers.DatabaseHelper.getSqlStatement();
        String preset = benchprops.getProperty("lookup.name", "alpha") + benchprops.getProperty("lookup.region", "bravo");
        String sql = "SELECT userid, passwd FROM USERS WHERE name = '" + preset + "'";
        java.sql.ResultSet results = statement.executeQuery(sql);
        response.getWriter().println("rows=" + results.getRow());
    }
}
